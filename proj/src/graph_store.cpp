#include "diffkg/graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_set>

#include "diffkg/errors.hpp"

namespace diffkg {

namespace {

/// Parse a whitespace-separated line of integers; returns false on blank lines.
bool parse_int_line(const std::string& line, std::vector<std::int64_t>& out) {
    out.clear();
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
        if (pos >= line.size()) break;
        bool neg = false;
        if (line[pos] == '-') {
            neg = true;
            ++pos;
        }
        if (pos >= line.size() || line[pos] < '0' || line[pos] > '9') return false;
        std::int64_t v = 0;
        while (pos < line.size() && line[pos] >= '0' && line[pos] <= '9') {
            v = v * 10 + (line[pos] - '0');
            ++pos;
        }
        if (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') return false;
        out.push_back(neg ? -v : v);
    }
    return true;
}

void densify(std::vector<std::int64_t>& ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

std::uint32_t dense_of(const std::vector<std::int64_t>& sorted_ids, std::int64_t id) {
    auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
    return static_cast<std::uint32_t>(it - sorted_ids.begin());
}

}  // namespace

InteractionGraph InteractionGraph::from_pairs(
    std::vector<std::pair<std::int64_t, std::int64_t>> raw) {
    std::sort(raw.begin(), raw.end());
    raw.erase(std::unique(raw.begin(), raw.end()), raw.end());

    InteractionGraph g;
    std::vector<std::int64_t> users, items;
    users.reserve(raw.size());
    items.reserve(raw.size());
    for (auto& [u, i] : raw) {
        users.push_back(u);
        items.push_back(i);
    }
    densify(users);
    densify(items);
    g.user_orig = users;
    g.item_orig = items;
    g.n_users = users.size();
    g.n_items = items.size();

    g.edges.reserve(raw.size());
    for (auto& [u, i] : raw) g.edges.emplace_back(dense_of(users, u), dense_of(items, i));
    std::sort(g.edges.begin(), g.edges.end());

    g.user_ptr.assign(g.n_users + 1, 0);
    g.item_ptr.assign(g.n_items + 1, 0);
    for (auto& [u, i] : g.edges) {
        ++g.user_ptr[u + 1];
        ++g.item_ptr[i + 1];
    }
    for (std::size_t u = 0; u < g.n_users; ++u) g.user_ptr[u + 1] += g.user_ptr[u];
    for (std::size_t i = 0; i < g.n_items; ++i) g.item_ptr[i + 1] += g.item_ptr[i];
    g.user_items.resize(g.edges.size());
    g.item_users.resize(g.edges.size());
    std::vector<std::uint32_t> ufill(g.user_ptr.begin(), g.user_ptr.end() - 1);
    std::vector<std::uint32_t> ifill(g.item_ptr.begin(), g.item_ptr.end() - 1);
    for (auto& [u, i] : g.edges) {
        g.user_items[ufill[u]++] = i;
        g.item_users[ifill[i]++] = u;
    }
    return g;
}

std::vector<std::pair<std::int64_t, std::int64_t>> read_pair_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open interactions file: " + path);
    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    std::string line;
    std::vector<std::int64_t> fields;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!parse_int_line(line, fields)) {
            throw DataError(path + ": line " + std::to_string(lineno) + ": malformed pair: " + line);
        }
        if (fields.empty()) continue;
        if (fields.size() != 2) {
            throw DataError(path + ": line " + std::to_string(lineno) +
                            ": expected \"user item\", got " + std::to_string(fields.size()) +
                            " fields");
        }
        if (fields[0] < 0 || fields[1] < 0) {
            throw DataError(path + ": line " + std::to_string(lineno) + ": negative id: " + line);
        }
        raw.emplace_back(fields[0], fields[1]);
    }
    return raw;
}

InteractionGraph load_interactions(const std::string& path) {
    auto raw = read_pair_file(path);
    if (raw.empty()) throw DataError(path + ": no interactions found");
    return InteractionGraph::from_pairs(std::move(raw));
}

std::vector<std::array<std::int64_t, 3>> read_triplet_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open triplet file: " + path);
    std::vector<std::array<std::int64_t, 3>> out;
    std::string line;
    std::vector<std::int64_t> fields;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!parse_int_line(line, fields)) {
            throw DataError(path + ": line " + std::to_string(lineno) + ": malformed triplet: " + line);
        }
        if (fields.empty()) continue;
        if (fields.size() != 3) {
            throw DataError(path + ": line " + std::to_string(lineno) +
                            ": expected \"head relation tail\", got " +
                            std::to_string(fields.size()) + " fields");
        }
        out.push_back({fields[0], fields[1], fields[2]});
    }
    return out;
}

bool KnowledgeGraph::has_edge(std::uint32_t item, std::uint32_t entity) const {
    auto r = row(item);
    return std::binary_search(r.begin(), r.end(), entity);
}

std::uint32_t KnowledgeGraph::relation_for(std::uint32_t item, std::uint32_t entity) const {
    auto n = neighbors(item);
    auto it = std::lower_bound(n.begin(), n.end(), std::make_pair(entity, std::uint32_t(0)));
    if (it != n.end() && it->first == entity) return it->second;
    return most_frequent_relation;
}

KnowledgeGraph KnowledgeGraph::build(std::vector<Triplet> triplets, std::size_t n_items) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return std::tie(a.head, a.rel, a.tail) < std::tie(b.head, b.rel, b.tail);
    });
    triplets.erase(std::unique(triplets.begin(), triplets.end()), triplets.end());

    KnowledgeGraph kg;
    kg.n_items = n_items;
    kg.triplets = std::move(triplets);

    std::size_t max_node = n_items;
    std::size_t max_rel = 0;
    for (const auto& t : kg.triplets) {
        max_node = std::max<std::size_t>(max_node, std::max(t.head, t.tail) + std::size_t(1));
        max_rel = std::max<std::size_t>(max_rel, t.rel + std::size_t(1));
    }
    kg.n_entities = max_node;
    kg.n_relations = std::max<std::size_t>(max_rel, 1);

    // Undirected item-entity incidence: a triplet touching an item id on
    // either end contributes to that item's row and neighbor list.
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> per_item(n_items);
    for (const auto& t : kg.triplets) {
        if (t.head < n_items) per_item[t.head].emplace_back(t.tail, t.rel);
        if (t.tail < n_items && t.tail != t.head) per_item[t.tail].emplace_back(t.head, t.rel);
    }

    kg.row_ptr.assign(n_items + 1, 0);
    kg.nbr_ptr.assign(n_items + 1, 0);
    for (std::size_t i = 0; i < n_items; ++i) {
        auto& lst = per_item[i];
        std::sort(lst.begin(), lst.end());
        lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
        std::uint32_t prev = UINT32_MAX;
        for (auto& [e, r] : lst) {
            kg.nbrs.emplace_back(e, r);
            if (e != prev) {
                kg.row_entities.push_back(e);
                prev = e;
            }
        }
        kg.nbr_ptr[i + 1] = static_cast<std::uint32_t>(kg.nbrs.size());
        kg.row_ptr[i + 1] = static_cast<std::uint32_t>(kg.row_entities.size());
    }

    std::vector<std::size_t> rel_count(kg.n_relations, 0);
    for (const auto& t : kg.triplets) ++rel_count[t.rel];
    kg.most_frequent_relation = static_cast<std::uint32_t>(
        std::max_element(rel_count.begin(), rel_count.end()) - rel_count.begin());
    return kg;
}

KnowledgeGraph load_triplets(const std::string& path, std::size_t n_items) {
    auto raw = read_triplet_file(path);
    std::vector<Triplet> ts;
    ts.reserve(raw.size());
    for (const auto& [h, r, t] : raw) {
        if (h < 0 || r < 0 || t < 0 || h > UINT32_MAX || r > UINT32_MAX || t > UINT32_MAX) {
            throw DataError(path + ": triplet (" + std::to_string(h) + ", " + std::to_string(r) +
                            ", " + std::to_string(t) + ") has an out-of-range id");
        }
        ts.push_back({static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(r),
                      static_cast<std::uint32_t>(t)});
    }
    return KnowledgeGraph::build(std::move(ts), n_items);
}

InteractionGraph k_core_filter(const InteractionGraph& g, std::size_t k) {
    if (k < 1) throw std::invalid_argument("k_core_filter: k must be >= 1, got " + std::to_string(k));
    std::vector<char> user_alive(g.n_users, 1), item_alive(g.n_items, 1);
    std::vector<std::size_t> udeg(g.n_users), ideg(g.n_items);
    for (std::uint32_t u = 0; u < g.n_users; ++u) udeg[u] = g.user_degree(u);
    for (std::uint32_t i = 0; i < g.n_items; ++i) ideg[i] = g.item_degree(i);

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::uint32_t u = 0; u < g.n_users; ++u) {
            if (user_alive[u] && udeg[u] < k) {
                user_alive[u] = 0;
                changed = true;
                for (std::uint32_t i : g.items_of(u))
                    if (item_alive[i]) --ideg[i];
            }
        }
        for (std::uint32_t i = 0; i < g.n_items; ++i) {
            if (item_alive[i] && ideg[i] < k) {
                item_alive[i] = 0;
                changed = true;
                for (std::uint32_t u : g.users_of(i))
                    if (user_alive[u]) --udeg[u];
            }
        }
    }

    std::vector<std::pair<std::int64_t, std::int64_t>> surviving;
    for (auto& [u, i] : g.edges) {
        if (user_alive[u] && item_alive[i]) surviving.emplace_back(g.user_orig[u], g.item_orig[i]);
    }
    if (surviving.empty()) {
        throw DataError("k-core filtering with k=" + std::to_string(k) +
                        " removed every interaction; use a smaller k");
    }
    return InteractionGraph::from_pairs(std::move(surviving));
}

std::size_t DatasetSplit::train_edge_count() const {
    std::size_t n = 0;
    for (const auto& t : train) n += t.size();
    return n;
}

bool DatasetSplit::in_train(std::uint32_t u, std::uint32_t i) const {
    return std::binary_search(train[u].begin(), train[u].end(), i);
}

DatasetSplit split(const InteractionGraph& g, double test_ratio, std::uint64_t seed) {
    if (!(test_ratio > 0.0 && test_ratio < 1.0)) {
        throw std::invalid_argument("split: test_ratio must be in (0,1), got " +
                                    std::to_string(test_ratio));
    }
    DatasetSplit s;
    s.n_users = g.n_users;
    s.n_items = g.n_items;
    s.seed = seed;
    s.train.resize(g.n_users);
    s.test.resize(g.n_users);
    Rng rng(seed);
    for (std::uint32_t u = 0; u < g.n_users; ++u) {
        auto items = g.items_of(u);
        std::vector<std::uint32_t> shuffled(items.begin(), items.end());
        rng.shuffle(shuffled);
        std::size_t n = shuffled.size();
        std::size_t n_test = n < 2 ? 0 : std::min<std::size_t>(
                                             static_cast<std::size_t>(n * test_ratio), n - 1);
        s.train[u].assign(shuffled.begin(), shuffled.end() - n_test);
        s.test[u].assign(shuffled.end() - n_test, shuffled.end());
        std::sort(s.train[u].begin(), s.train[u].end());
        std::sort(s.test[u].begin(), s.test[u].end());
    }
    return s;
}

SpMatPtr build_norm_adjacency(const DatasetSplit& s) {
    std::vector<std::size_t> ideg(s.n_items, 0);
    for (const auto& items : s.train)
        for (std::uint32_t i : items) ++ideg[i];
    std::vector<std::tuple<std::uint32_t, std::uint32_t, real>> entries;
    entries.reserve(s.train_edge_count());
    for (std::uint32_t u = 0; u < s.n_users; ++u) {
        std::size_t du = s.train[u].size();
        for (std::uint32_t i : s.train[u]) {
            entries.emplace_back(u, i, real(1) / std::sqrt(real(du) * real(ideg[i])));
        }
    }
    return std::make_shared<SpMat>(SpMat::from_coo(s.n_users, s.n_items, std::move(entries)));
}

SpMatPtr build_interaction_matrix(const DatasetSplit& s) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, real>> entries;
    entries.reserve(s.train_edge_count());
    for (std::uint32_t u = 0; u < s.n_users; ++u)
        for (std::uint32_t i : s.train[u]) entries.emplace_back(u, i, real(1));
    return std::make_shared<SpMat>(SpMat::from_coo(s.n_users, s.n_items, std::move(entries)));
}

std::vector<BprTriple> sample_bpr_triples(const DatasetSplit& s, std::size_t batch_size, Rng& rng) {
    std::vector<std::uint32_t> eligible;
    eligible.reserve(s.n_users);
    for (std::uint32_t u = 0; u < s.n_users; ++u) {
        if (!s.train[u].empty()) eligible.push_back(u);
    }
    if (eligible.empty()) throw DataError("sample_bpr_triples: no users with train interactions");

    std::vector<BprTriple> out;
    out.reserve(batch_size);
    std::unordered_set<std::uint32_t> warned;
    while (out.size() < batch_size) {
        std::uint32_t u = eligible[rng.below(eligible.size())];
        if (s.train[u].size() >= s.n_items) {
            if (warned.insert(u).second) {
                std::fprintf(stderr, "warning: user %u interacts with every item; skipped\n", u);
            }
            continue;
        }
        std::uint32_t i = s.train[u][rng.below(s.train[u].size())];
        std::uint32_t j;
        do {
            j = static_cast<std::uint32_t>(rng.below(s.n_items));
        } while (s.in_train(u, j));
        out.push_back({u, i, j});
    }
    return out;
}

void write_interactions(const std::string& path,
                        const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (auto& [u, i] : edges) out << u << " " << i << "\n";
}

void write_triplets(const std::string& path, const std::vector<Triplet>& triplets) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& t : triplets) out << t.head << " " << t.rel << " " << t.tail << "\n";
}

void write_id_map(const std::string& path, const std::vector<std::int64_t>& orig_of_dense) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (std::size_t d = 0; d < orig_of_dense.size(); ++d) out << orig_of_dense[d] << " " << d << "\n";
}

}  // namespace diffkg
