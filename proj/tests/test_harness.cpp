#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ontosim/config.hpp"
#include "ontosim/errors.hpp"
#include "ontosim/records.hpp"
#include "ontosim/runner.hpp"

using namespace ontosim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "ontosim-harness-test";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string grw_config_text() {
  return R"({"model":"grw","seed":5,"params":{"points":16,"extent":8.0,)"
         R"("particles":1,"collapse_rate":1.0,"collapse_width":1.1,)"
         R"("duration":1.0,"runs":3,"packet":{"width":[0.8]}}})";
}

}  // namespace

TEST_CASE("records survive a write/read round trip") {
  TempDir dir;
  std::vector<records::Record> rows = {
      records::flash_record(0.5, {1.25, -3.0}, 1),
      records::sample_record(1.0, {0.1, 0.2, 0.3}),
      records::density_record(2.0, 1, 4, 8.0, {0.1, 0.2, 0.3, 0.4}),
  };
  std::string path = dir.file("records.jsonl");
  records::write_records(rows, path);

  std::vector<records::Record> back = records::read_records(path);
  REQUIRE(back.size() == rows.size());

  CHECK(back[0].kind == records::Kind::flash);
  CHECK(back[0].t == 0.5);
  CHECK(back[0].label == 1);
  CHECK(back[0].data == std::vector<double>{1.25, -3.0});

  CHECK(back[1].kind == records::Kind::sample);
  CHECK(back[1].t == 1.0);
  CHECK(back[1].data == std::vector<double>{0.1, 0.2, 0.3});

  CHECK(back[2].kind == records::Kind::density);
  CHECK(back[2].axes == 1);
  CHECK(back[2].points_per_axis == 4);
  CHECK(back[2].extent == 8.0);
  CHECK(back[2].data.size() == 4);
}

TEST_CASE("invalid records are rejected before the file is touched") {
  TempDir dir;
  std::string path = dir.file("bad.jsonl");

  std::vector<records::Record> rows = {
      records::flash_record(0.0, {std::nan("")}, 0),        // non-finite
      records::flash_record(0.0, {1.0}, -1),                // bad label
      records::density_record(0.0, 1, 4, 8.0, {1.0, 2.0}),  // wrong count
  };
  try {
    records::write_records(rows, path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() >= 3);
  }
  CHECK_FALSE(fs::exists(path));
}

TEST_CASE("csv export flattens one value per row") {
  TempDir dir;
  std::vector<records::Record> rows = {
      records::flash_record(0.5, {1.0, 2.0}, 0),
      records::sample_record(1.5, {3.0}),
  };
  std::string path = dir.file("out.csv");
  records::export_csv(rows, path);

  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);

  REQUIRE(lines.size() == 4);  // header + 2 flash values + 1 sample value
  CHECK(lines[0] == "kind,t,label,i,value");
  CHECK(lines[1].find("flash,0.5,0,0,1") == 0);
  CHECK(lines[3].find("sample,1.5,") == 0);
}

TEST_CASE("malformed record files report where parsing broke") {
  TempDir dir;
  std::string path = dir.file("broken.jsonl");
  spit(path, "{\"kind\":\"sample\",\"t\":0,\"q\":[1]}\n{oops\n");
  try {
    records::read_records(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 1);
    CHECK(e.column() >= 1);
  }
}

TEST_CASE("missing files and directories surface as io errors") {
  CHECK_THROWS_AS(records::read_records("/no/such/dir/records.jsonl"),
                  IoError);
  CHECK_THROWS_AS(
      records::write_records({records::sample_record(0.0, {1.0})},
                             "/no/such/dir/records.jsonl"),
      IoError);
}

TEST_CASE("loading a config fills every default back into params") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  spit(path, R"({"model":"grw","params":{}})");

  harness::ExperimentConfig cfg = harness::load_config(path);
  CHECK(cfg.model == "grw");
  CHECK(cfg.seed == 1);
  for (const char* key : {"points", "extent", "particles", "collapse_rate",
                          "collapse_width", "duration", "runs"})
    CHECK(cfg.params.contains(key));

  // the decoded setup must satisfy its own validators
  CHECK_NOTHROW(harness::decode_grw(cfg));
}

TEST_CASE("parameter violations are aggregated and name their fields") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  spit(path, R"({"model":"grw","params":{"collapse_rate":-2.0,"runs":0}})");
  try {
    harness::load_config(path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    bool rate = false, runs = false;
    for (const std::string& v : e.violations()) {
      rate = rate || v.find("collapse_rate") != std::string::npos;
      runs = runs || v.find("runs") != std::string::npos;
    }
    CHECK(rate);
    CHECK(runs);
  }
}

TEST_CASE("unknown top-level keys are rejected by name") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  spit(path, R"({"model":"grw","bogus":1,"params":{}})");
  try {
    harness::load_config(path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    bool bogus = false;
    for (const std::string& v : e.violations())
      bogus = bogus || v.find("bogus") != std::string::npos;
    CHECK(bogus);
  }
}

TEST_CASE("unknown models are rejected") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  spit(path, R"({"model":"psi-epistemic","params":{}})");
  CHECK_THROWS_AS(harness::load_config(path), ValidationError);
}

TEST_CASE("malformed config json reports line and column") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  spit(path, "{\"model\": \"grw\",\n  \"params\": {,}\n}");
  try {
    harness::load_config(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 1);
  }
}

TEST_CASE("canonical form ignores the output directory") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  spit(path, grw_config_text());

  harness::ExperimentConfig cfg = harness::load_config(path);
  harness::ExperimentConfig moved = cfg;
  moved.out_dir = "/somewhere/else";

  CHECK(harness::canonical_json(cfg) == harness::canonical_json(moved));
  CHECK_FALSE(harness::canonical_json(moved).contains("out_dir"));
  CHECK(harness::config_hash(cfg) == harness::config_hash(moved));

  harness::ExperimentConfig reseeded = cfg;
  reseeded.seed = 6;
  CHECK(harness::config_hash(reseeded) != harness::config_hash(cfg));

  std::string hash = harness::config_hash(cfg);
  CHECK(hash.size() == 16);
  for (char c : hash) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
}

TEST_CASE("config hash is insensitive to key order in the source file") {
  TempDir dir;
  std::string a = dir.file("a.json");
  std::string b = dir.file("b.json");
  spit(a, R"({"model":"bell_pure","seed":3,"params":{"sites":5,"runs":2}})");
  spit(b, R"({"params":{"runs":2,"sites":5},"seed":3,"model":"bell_pure"})");
  CHECK(harness::config_hash(harness::load_config(a)) ==
        harness::config_hash(harness::load_config(b)));
}

TEST_CASE("saved configs reload to the same canonical form") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  spit(path, grw_config_text());
  harness::ExperimentConfig cfg = harness::load_config(path);

  std::string copy = dir.file("copy.json");
  harness::save_config(cfg, copy);
  harness::ExperimentConfig back = harness::load_config(copy);
  CHECK(harness::config_hash(cfg) == harness::config_hash(back));
}

TEST_CASE("output directory resolution prefers config, then environment") {
  harness::ExperimentConfig cfg;
  cfg.out_dir = "/explicit/path";
  setenv("ONTOSIM_OUT_DIR", "/from/env", 1);
  CHECK(harness::resolved_out_dir(cfg) == "/explicit/path");

  cfg.out_dir.clear();
  CHECK(harness::resolved_out_dir(cfg) == "/from/env");

  unsetenv("ONTOSIM_OUT_DIR");
  CHECK(harness::resolved_out_dir(cfg) == ".");
}

TEST_CASE("parallel run pool claims every index exactly once") {
  for (int threads : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(100);
    for (auto& h : hits) h = 0;
    harness::parallel_runs(100, threads, [&](int i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h == 1);
  }
  harness::parallel_runs(0, 2, [](int) { FAIL("no indices to run"); });
}

TEST_CASE("experiments land records and a manifest in the out dir") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  spit(path, grw_config_text());

  harness::ExperimentConfig cfg = harness::load_config(path);
  cfg.out_dir = dir.file("out");
  harness::RunManifest m = harness::run_experiment(cfg);

  CHECK(m.config_hash == harness::config_hash(cfg));
  CHECK(m.seed == 5);
  CHECK(m.total_runs == 3);
  CHECK(m.failure_count == 0);
  REQUIRE(!m.outputs.empty());
  CHECK(m.outputs[0].first == "records.jsonl");
  CHECK(m.outputs[0].second > 0);

  std::vector<records::Record> rows =
      records::read_records(dir.file("out") + "/records.jsonl");
  CHECK(rows.size() == m.outputs[0].second);
  bool any_flash = false;
  for (const records::Record& r : rows)
    any_flash = any_flash || r.kind == records::Kind::flash;
  CHECK(any_flash);

  std::string manifest_text = slurp(dir.file("out") + "/manifest.json");
  REQUIRE(!manifest_text.empty());
  nlohmann::json mj = nlohmann::json::parse(manifest_text);
  CHECK(mj["config_hash"] == m.config_hash);
  CHECK(mj["seed"] == 5);
  CHECK_FALSE(mj.contains("wall_time_s"));
}

TEST_CASE("a failing ensemble aborts the experiment") {
  TempDir dir;
  std::string path = dir.file("cfg.json");
  // Guidance with an absurdly wide node guard: most walkers start below it
  // and fail immediately, tripping the failure threshold.
  spit(path,
       R"({"model":"bohm","seed":2,"params":{"points":64,"extent":16.0,)"
       R"("particles":1,"duration":0.2,"walkers":40,"node_guard":0.2,)"
       R"("packet_a":{"center":[0.0],"width":[1.0]},)"
       R"("packet_b":{"center":[0.0],"width":[1.0]}}})");

  harness::ExperimentConfig cfg = harness::load_config(path);
  cfg.out_dir = dir.file("out");
  CHECK_THROWS_AS(harness::run_experiment(cfg), RunFailure);
}
