#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "diffkg/config.hpp"
#include "diffkg/errors.hpp"
#include "doctest.h"

using namespace diffkg;
namespace fs = std::filesystem;

namespace {

std::string write_cfg(const std::string& name, const std::string& content) {
    auto p = (fs::temp_directory_path() / name).string();
    std::ofstream out(p);
    out << content;
    return p;
}

}  // namespace

TEST_CASE("config resolution") {
    SUBCASE("empty file leaves all defaults") {
        auto p = write_cfg("dk_cfg_empty.txt", "# nothing here\n\n");
        auto cfg = resolve_config(p, {});
        RunConfig defaults;
        CHECK(render_config(cfg) == render_config(defaults));
    }
    SUBCASE("flags override file values") {
        auto p = write_cfg("dk_cfg_t.txt", "T=5\n");
        auto cfg = resolve_config(p, {{"T", "10"}});
        CHECK(cfg.hp.T == 10);
    }
    SUBCASE("environment sits between file and flags") {
        auto p = write_cfg("dk_cfg_env.txt", "epochs=3\nd=16\n");
        setenv("DIFFKG_EPOCHS", "7", 1);
        setenv("DIFFKG_D", "32", 1);
        auto cfg = resolve_config(p, {{"d", "64"}});
        unsetenv("DIFFKG_EPOCHS");
        unsetenv("DIFFKG_D");
        CHECK(cfg.hp.epochs == 7);
        CHECK(cfg.hp.d == 64);
    }
    SUBCASE("unknown key named in the error") {
        auto p = write_cfg("dk_cfg_bad.txt", "lambdaX=1\n");
        CHECK_THROWS_WITH_AS(resolve_config(p, {}), doctest::Contains("lambdaX"), UsageError);
    }
    SUBCASE("type mismatch names the expected type") {
        auto p = write_cfg("dk_cfg_type.txt", "T=five\n");
        CHECK_THROWS_WITH_AS(resolve_config(p, {}), doctest::Contains("integer"), UsageError);
    }
    SUBCASE("out-of-range lambda0 rejected at validation") {
        auto p = write_cfg("dk_cfg_l0.txt", "lambda0=1.5\n");
        auto cfg = resolve_config(p, {});
        CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("lambda0"), UsageError);
    }
    SUBCASE("resolved config round-trips through its own file format") {
        RunConfig cfg;
        cfg.hp.T = 9;
        cfg.hp.lambda1 = real(0.125);
        cfg.out = "elsewhere";
        auto p = (fs::temp_directory_path() / "dk_cfg_rt.txt").string();
        write_resolved_config(cfg, p);
        auto back = resolve_config(p, {});
        CHECK(render_config(back) == render_config(cfg));
    }
}
