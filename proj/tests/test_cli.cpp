#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qfsl/cli.hpp"
#include "qfsl/model.hpp"

namespace fs = std::filesystem;
using namespace qfsl;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qfsl_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

const std::vector<std::string> kSmall = {"--source-classes", "6", "--target-classes", "3", "--per-class", "10",
                                         "--dim", "8", "--attr-dim", "5"};
const std::vector<std::string> kFast = {"--iterations", "40", "--batch", "16", "--lr", "0.05"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

fs::path small_dataset(const std::string& name) {
  const fs::path dir = scratch(name) / "data";
  REQUIRE(run(cat({"gen-synth", "--out", dir.string()}, kSmall)).code == 0);
  return dir;
}

}  // namespace

TEST_CASE("gen-synth defaults and reproducibility") {
  const fs::path root = scratch("gen");
  const Run r = run({"gen-synth", "--out", (root / "a").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("config: source_classes=40 target_classes=10", 0) == 0);
  const std::string feats = slurp(root / "a" / "features.tsv");
  CHECK(feats.rfind("QFSL-FEAT v1 instances=2500 dim=32\n", 0) == 0);
  CHECK(count_lines(feats) == 2501);

  REQUIRE(run({"gen-synth", "--out", (root / "b").string(), "--seed", "7"}).code == 0);
  for (const char* f : {"attributes.tsv", "features.tsv", "split.tsv"}) {
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
  }
  REQUIRE(run({"gen-synth", "--out", (root / "c").string(), "--seed", "8"}).code == 0);
  CHECK(slurp(root / "a" / "attributes.tsv") != slurp(root / "c" / "attributes.tsv"));
}

TEST_CASE("usage errors exit 1") {
  const fs::path root = scratch("usage");
  CHECK(run({"gen-synth", "--out", (root / "x").string(), "--source-classes", "0"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"train", "--data", "nowhere"}).code == kExitUsage);
  const fs::path data = small_dataset("usage2");
  CHECK(run({"train", "--data", data.string(), "--out", (root / "m.txt").string(), "--iterations", "0"}).code ==
        kExitUsage);
  CHECK(run({"train", "--data", data.string(), "--out", (root / "m.txt").string(), "--mode", "other"}).code ==
        kExitUsage);
}

TEST_CASE("data errors exit 2") {
  const fs::path root = scratch("dataerr");
  const Run missing = run({"train", "--data", (root / "absent").string(), "--out", (root / "m.txt").string()});
  CHECK(missing.code == kExitData);
  CHECK_FALSE(missing.err.empty());

  const fs::path data = small_dataset("dataerr2");
  std::ofstream(data / "split.tsv", std::ios::app) << "ghost_i000\tsource-train\n";
  CHECK(run(cat({"train", "--data", data.string(), "--out", (root / "m.txt").string()}, kFast)).code == kExitData);
}

TEST_CASE("numerical failure exits 3") {
  const fs::path data = small_dataset("num");
  const fs::path root = data.parent_path();
  const Run r = run({"train", "--data", data.string(), "--out", (root / "m.txt").string(), "--lr", "1e300",
                     "--iterations", "50", "--batch", "16"});
  CHECK(r.code == kExitNumerical);
}

TEST_CASE("train writes model and log") {
  const fs::path data = small_dataset("train");
  const fs::path root = data.parent_path();
  const Run r = run(cat({"train", "--data", data.string(), "--out", (root / "m.txt").string(), "--log",
                         (root / "log.tsv").string()},
                        kFast));
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("\nconfig: mode=qfsl lambda=1 ") != std::string::npos);
  CHECK(r.out.find("model checksum") != std::string::npos);
  CHECK(count_lines(slurp(root / "log.tsv")) == 41);
  CHECK_NOTHROW(load_model((root / "m.txt").string()));

  REQUIRE(run(cat({"train", "--data", data.string(), "--out", (root / "m2.txt").string()}, kFast)).code == 0);
  CHECK(slurp(root / "m.txt") == slurp(root / "m2.txt"));
}

TEST_CASE("lambda 0 and inductive mode agree without a target pool") {
  const fs::path data = small_dataset("nopool");
  const fs::path root = data.parent_path();
  // drop every target-pool row from the split
  std::istringstream split(slurp(data / "split.tsv"));
  std::ostringstream kept;
  std::vector<std::string> pool_ids;
  for (std::string line; std::getline(split, line);) {
    if (line.find("\ttarget-pool") != std::string::npos) {
      pool_ids.push_back(line.substr(0, line.find('\t')));
      continue;
    }
    kept << line << '\n';
  }
  REQUIRE_FALSE(pool_ids.empty());
  std::istringstream feats(slurp(data / "features.tsv"));
  std::ostringstream kept_feats;
  std::size_t n = 0;
  std::string header;
  std::getline(feats, header);
  std::ostringstream body;
  for (std::string line; std::getline(feats, line);) {
    const std::string id = line.substr(0, line.find('\t'));
    if (std::find(pool_ids.begin(), pool_ids.end(), id) != pool_ids.end()) continue;
    body << line << '\n';
    ++n;
  }
  kept_feats << "QFSL-FEAT v1 instances=" << n << " dim=8\n" << body.str();
  std::ofstream(data / "split.tsv", std::ios::trunc) << kept.str();
  std::ofstream(data / "features.tsv", std::ios::trunc) << kept_feats.str();

  REQUIRE(run(cat({"train", "--data", data.string(), "--out", (root / "q.txt").string(), "--lambda", "0", "--mode",
                   "qfsl"},
                  kFast))
              .code == 0);
  REQUIRE(run(cat({"train", "--data", data.string(), "--out", (root / "i.txt").string(), "--mode", "inductive"}, kFast))
              .code == 0);
  CHECK(slurp(root / "q.txt") == slurp(root / "i.txt"));
}

TEST_CASE("eval report layout") {
  const fs::path data = small_dataset("eval");
  const fs::path root = data.parent_path();
  REQUIRE(run(cat({"train", "--data", data.string(), "--out", (root / "m.txt").string()}, kFast)).code == 0);
  const Run g = run({"eval", "--model", (root / "m.txt").string(), "--data", data.string(), "--setting",
                     "generalized", "--report", (root / "g.tsv").string()});
  REQUIRE(g.code == kExitOk);
  CHECK(g.out.find("MCA_s") != std::string::npos);
  CHECK(g.out.find("H") != std::string::npos);
  const std::string gt = slurp(root / "g.tsv");
  CHECK(gt.find("MCA_s") != std::string::npos);
  CHECK(count_lines(gt) == 2);

  const Run c = run({"eval", "--model", (root / "m.txt").string(), "--data", data.string(), "--setting",
                     "conventional", "--report", (root / "c.tsv").string()});
  REQUIRE(c.code == kExitOk);
  CHECK(slurp(root / "c.tsv").find("MCA_s") == std::string::npos);

  CHECK(run({"eval", "--model", (root / "m.txt").string(), "--data", data.string(), "--setting", "both"}).code ==
        kExitUsage);
  std::ofstream(root / "broken.txt") << "QFSL-MODEL v9\n";
  CHECK(run({"eval", "--model", (root / "broken.txt").string(), "--data", data.string(), "--setting",
             "generalized"})
            .code == kExitData);
}

TEST_CASE("protocol outputs") {
  const fs::path data = small_dataset("proto");
  const fs::path root = data.parent_path();

  const Run two = run(cat({"protocol", "two-fold", "--data", data.string(), "--out", (root / "two.tsv").string()}, kFast));
  REQUIRE(two.code == kExitOk);
  const std::string tt = slurp(root / "two.tsv");
  CHECK(tt.find("fold1") != std::string::npos);
  CHECK(tt.find("fold2") != std::string::npos);
  CHECK(tt.find("average") != std::string::npos);
  CHECK(count_lines(tt) == 8);

  const Run lam = run(cat({"protocol", "lambda-sweep", "--data", data.string(), "--out", (root / "lam.tsv").string(),
                           "--seeds", "1,2"},
                          kFast));
  REQUIRE(lam.code == kExitOk);
  CHECK(count_lines(slurp(root / "lam.tsv")) == 7);

  const Run imb = run(cat({"protocol", "imbalance-sweep", "--data", data.string(), "--out",
                           (root / "imb.tsv").string(), "--source-counts", "2,4,6"},
                          kFast));
  REQUIRE(imb.code == kExitOk);
  const std::string it = slurp(root / "imb.tsv");
  CHECK(count_lines(it) == 7);
  CHECK(it.find("QFSL-\t") != std::string::npos);

  CHECK(run({"protocol", "sideways", "--data", data.string(), "--out", (root / "x.tsv").string()}).code == kExitUsage);
}

TEST_CASE("gradcheck exit codes") {
  const Run ok = run({"gradcheck"});
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.find("PASS") != std::string::npos);
  const Run bad = run({"gradcheck", "--inject-bug"});
  CHECK(bad.code == kExitGradcheck);
  CHECK(bad.out.find("FAIL") != std::string::npos);
}
