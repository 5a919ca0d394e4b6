#include "helpers.hpp"

#include "occlusion/config.hpp"
#include "occlusion/media.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

using namespace occlusion;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + OCCLUSIONBOUND_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults are valid and round trip through text") {
    const PipelineConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.forest.trees == 105);
    CHECK(c.forest.features_per_node == 11);
    CHECK(c.forest.max_depth == 35);
    CHECK(c.window == 30);
    const std::string text = format_config(c);
    const PipelineConfig back = apply_settings(PipelineConfig{}, parse_key_values(text));
    CHECK(format_config(back) == text);
  }

  TEST_CASE("settings override the base") {
    const PipelineConfig c = apply_settings({}, {{"seg.w_occl", "0.25"}, {"infer.window", "1"}, {"flow_source", "estimate"}});
    CHECK(c.seg.w_occl == 0.25);
    CHECK(c.window == 1);
    CHECK(c.flow_source == FlowSource::estimated);
  }

  TEST_CASE("file values yield to overrides") {
    const fs::path dir = testing::temp_dir("config_file");
    write_text(dir / "run.cfg", "# fleet\nvideos = 4\nseed=11\n");
    const PipelineConfig c = load_config(dir / "run.cfg", {{"seed", "12"}});
    CHECK(c.videos == 4);
    CHECK(c.seed == 12);
    CHECK_THROWS_AS(load_config(dir / "absent.cfg"), MissingArtifact);
  }

  TEST_CASE("every problem is reported at once") {
    try {
      apply_settings({}, {{"nonsense", "1"}, {"seg.k", "abc"}});
      FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("nonsense") != std::string::npos);
      CHECK(msg.find("seg.k") != std::string::npos);
    }
    const PipelineConfig bad = apply_settings({}, {{"forest.trees", "0"}, {"infer.window", "0"}});
    try {
      bad.validate();
      FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("forest.trees") != std::string::npos);
      CHECK(msg.find("infer.window") != std::string::npos);
    }
  }

  TEST_CASE("seeds are namespaced and stable") {
    CHECK(derive_seed(7, "scene", 0) == derive_seed(7, "scene", 0));
    CHECK(derive_seed(7, "scene", 0) != derive_seed(7, "scene", 1));
    CHECK(derive_seed(7, "scene", 0) != derive_seed(7, "geometry", 0));
    CHECK(derive_seed(7, "scene", 0) != derive_seed(8, "scene", 0));
  }

  TEST_CASE("thread count resolution") {
    ::unsetenv("OCCLUSIONBOUND_THREADS");
    CHECK(resolve_threads(0) == 1);
    CHECK(resolve_threads(3) == 3);
    ::setenv("OCCLUSIONBOUND_THREADS", "5", 1);
    CHECK(resolve_threads(0) == 5);
    CHECK(resolve_threads(2) == 2);
    ::unsetenv("OCCLUSIONBOUND_THREADS");
  }

  TEST_CASE("exit codes") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(ParameterError("x")) == 2);
    CHECK(exit_code_for(MissingArtifact("x")) == 3);
    CHECK(exit_code_for(NumericalError("x")) == 4);
    CHECK(exit_code_for(FormatError("x")) == 1);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("stages run in order and eval needs infer") {
    const fs::path dir = testing::temp_dir("cli_stages");
    const fs::path data = dir / "video";
    REQUIRE(run_cli("synth --out " + q(data) + " --seed 3 --width 40 --height 32 --frames 5") == 0);
    CHECK(run_cli("eval --data " + q(data)) == 3);
    REQUIRE(run_cli("segment --data " + q(data) + " --k 80 --min-size 20") == 0);
    CHECK(fs::exists(data / "labels.svlm"));
    REQUIRE(run_cli("edgelets --data " + q(data)) == 0);
    REQUIRE(run_cli("features --data " + q(data)) == 0);
    const std::string small = " --set forest.trees=5";
    REQUIRE(run_cli("train-unary --features " + q(data / "features.csv") + " --out " + q(dir / "u.model") + small) == 0);
    REQUIRE(run_cli("train-pairwise --pairs " + q(data / "pairs.csv") + " --out " + q(dir / "p.model") + small) == 0);
    REQUIRE(run_cli("infer --data " + q(data) + " --unary-model " + q(dir / "u.model") + " --pairwise-model " +
                    q(dir / "p.model") + " --window 5") == 0);
    CHECK(fs::exists(data / "probabilities.csv"));
    CHECK(fs::exists(data / "occlusion_prob.gcm1"));
    REQUIRE(run_cli("eval --data " + q(data) + " --out " + q(dir / "eval")) == 0);
    CHECK(fs::exists(dir / "eval" / "pr_curve.csv"));
    CHECK(run_cli("occlusion-segment --data " + q(data)) == 0);
    CHECK(fs::exists(data / "labels_occlusion.svlm"));
  }

  TEST_CASE("configuration errors exit with code 2") {
    const fs::path dir = testing::temp_dir("cli_config");
    CHECK(run_cli("synth --out " + q(dir / "v") + " --set bogus.key=1") == 2);
    CHECK(run_cli("synth --out " + q(dir / "v") + " --set seg.k=-1") == 2);
    CHECK(run_cli("synth --no-such-flag") == 2);
  }

  TEST_CASE("missing inputs exit with code 3") {
    const fs::path dir = testing::temp_dir("cli_missing");
    CHECK(run_cli("segment --data " + q(dir / "nothing")) == 3);
    CHECK(run_cli("pipeline --config " + q(dir / "none.cfg") + " --out " + q(dir / "run")) == 3);
  }

  TEST_CASE("a small pipeline run writes a complete run directory") {
    const fs::path dir = testing::temp_dir("cli_pipeline");
    const std::string sets =
        " --set videos=2 --set eval.folds=2 --set width=32 --set height=32 --set frames=4 --set forest.trees=5"
        " --set ablation=false";
    REQUIRE(run_cli("pipeline --quiet --seed 3 --out " + q(dir / "run") + sets) == 0);
    for (const char* f : {"config.cfg", "pr_curve.csv", "summary.txt", "importance.csv", "log.txt"})
      CHECK(fs::exists(dir / "run" / f));
    const PipelineConfig used = load_config(dir / "run" / "config.cfg");
    CHECK(used.videos == 2);
    CHECK(used.seed == 3);
  }
}
