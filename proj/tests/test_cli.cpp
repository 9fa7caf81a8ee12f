#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    out << text;
}

class Scratch {
public:
    Scratch() {
        dir_ = fs::current_path() / "cli_scratch";
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        const char* bin = std::getenv("STREAMNET_BIN");
        REQUIRE_MESSAGE(bin != nullptr, "STREAMNET_BIN must point at the CLI binary");
        bin_ = bin;
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    CmdResult run(const std::string& args, const std::string& env_prefix = "") {
        const fs::path out_f = dir_ / ("stdout." + std::to_string(counter_));
        const fs::path err_f = dir_ / ("stderr." + std::to_string(counter_));
        ++counter_;
        const std::string cmd =
            env_prefix + bin_ + " " + args + " >" + out_f.string() + " 2>" + err_f.string();
        const int status = std::system(cmd.c_str());
        CmdResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = read_file(out_f);
        r.err = read_file(err_f);
        return r;
    }

private:
    fs::path dir_;
    std::string bin_;
    int counter_ = 0;
};

Scratch& scratch() {
    static Scratch s;
    return s;
}

const char* kPassThroughConfig = R"({"network": {"layers": [
  {"activation": "identity", "alpha": 0.0, "lambda": 0.0,
   "W": [[1.0]], "W_s": [[0.0]], "b": [0.0]}]}})";

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("run: pass-through over three records") {
    auto& s = scratch();
    write_file(s.path("pass.json"), kPassThroughConfig);
    write_file(s.path("tiny.txt"), "0.25\n-0.5\n1\n");
    auto r = s.run("run --config " + s.path("pass.json").string() + " --input " +
                   s.path("tiny.txt").string() + " --output " + s.path("out.csv").string());
    CHECK(r.code == 0);
    CHECK(r.err.find("steps: 3") != std::string::npos);
    const std::string csv = read_file(s.path("out.csv"));
    CHECK(csv.find("t,y0,s0,r\n") == 0);
    CHECK(count_lines(csv) == 4);  // header + 3 records
    CHECK(csv.find("1,0.25,0.25,\n") != std::string::npos);
}

TEST_CASE("run: stdin to stdout round-trip") {
    auto& s = scratch();
    auto r = s.run("run --output -", "printf '0.5\\n0.25\\n' | ");
    CHECK(r.code == 0);
    CHECK(r.out.find("t,y0,s0,r\n") == 0);
    CHECK(r.out.find("2,0.25,0.25,\n") != std::string::npos);
    CHECK(r.err.find("steps: 2") != std::string::npos);
}

TEST_CASE("run: empty input gives zero records and exit 0") {
    auto& s = scratch();
    write_file(s.path("empty.txt"), "");
    auto r = s.run("run --input " + s.path("empty.txt").string() + " --output " +
                   s.path("empty_out.csv").string());
    CHECK(r.code == 0);
    CHECK(r.err.find("steps: 0") != std::string::npos);
    CHECK(read_file(s.path("empty_out.csv")).empty());
}

TEST_CASE("run: malformed input line maps to exit 2 with the line number") {
    auto& s = scratch();
    write_file(s.path("bad.txt"), "0.5\nabc\n0.7\n");
    auto r = s.run("run --input " + s.path("bad.txt").string() + " --output " +
                   s.path("bad_out.csv").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("run: numeric overflow maps to exit 3") {
    auto& s = scratch();
    write_file(s.path("overflow.json"), R"({"network": {"layers": [
      {"activation": "identity", "alpha": 0.0, "lambda": 0.0,
       "W": [[1e308]], "W_s": [[0.0]], "b": [0.0]}]}})");
    write_file(s.path("ten.txt"), "10\n");
    auto r = s.run("run --config " + s.path("overflow.json").string() + " --input " +
                   s.path("ten.txt").string() + " --output " + s.path("ovf.csv").string());
    CHECK(r.code == 3);
    CHECK(r.err.find("fault") != std::string::npos);
}

TEST_CASE("run: jsonl format") {
    auto& s = scratch();
    write_file(s.path("one.txt"), "0.5\n");
    auto r = s.run("run --format jsonl --input " + s.path("one.txt").string() + " --output " +
                   s.path("one.jsonl").string());
    CHECK(r.code == 0);
    const std::string text = read_file(s.path("one.jsonl"));
    CHECK(text.find("{\"t\":1") == 0);
}

TEST_CASE("verify: reduced suite passes with exit 0") {
    auto& s = scratch();
    write_file(s.path("quick_verify.json"), R"({"verify": {
      "contraction_pairs": 25, "contraction_steps": 50,
      "bound_draws": 3, "bound_steps": 2000}})");
    auto r = s.run("verify all --config " + s.path("quick_verify.json").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("verify: single suite selection") {
    auto& s = scratch();
    write_file(s.path("quick_contraction.json"), R"({"verify": {
      "contraction_pairs": 10, "contraction_steps": 30}})");
    auto r = s.run("verify contraction --config " + s.path("quick_contraction.json").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("contraction lambda=0.5") != std::string::npos);
}

TEST_CASE("verify: machine-readable report via --output") {
    auto& s = scratch();
    write_file(s.path("quick_jsonl.json"), R"({"verify": {
      "contraction_pairs": 5, "contraction_steps": 20,
      "bound_draws": 1, "bound_steps": 500}})");
    auto r = s.run("verify all --config " + s.path("quick_jsonl.json").string() + " --output " +
                   s.path("verify.jsonl").string());
    CHECK(r.code == 0);
    const std::string jsonl = read_file(s.path("verify.jsonl"));
    CHECK(jsonl.find("{\"name\":\"contraction lambda=0\",\"pass\":true") == 0);
    CHECK(count_lines(jsonl) == 10);  // 5 contraction + 1 bounds + 4 collapse
}

TEST_CASE("verify: an invariant violation exits with code 4") {
    auto& s = scratch();
    // an impossible gate: zero ulps of slack cannot hold for lambda 0.9
    write_file(s.path("impossible.json"), R"({"verify": {
      "contraction_lambdas": [0.9], "contraction_pairs": 20,
      "contraction_steps": 50, "contraction_max_ulps": 0}})");
    auto r = s.run("verify contraction --config " + s.path("impossible.json").string());
    CHECK(r.code == 4);
    CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("verify: probe parallelism cap is honored") {
    auto& s = scratch();
    write_file(s.path("tiny_verify.json"), R"({"verify": {
      "contraction_pairs": 10, "contraction_steps": 20,
      "bound_draws": 2, "bound_steps": 1000}})");
    auto r = s.run("verify all --config " + s.path("tiny_verify.json").string(),
                   "STREAMNET_THREADS=1 ");
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("verify: invalid lambda in config is rejected before probes run") {
    auto& s = scratch();
    write_file(s.path("bad_lambda.json"), R"({"network": {"layers": [
      {"activation": "tanh", "alpha": 1.0, "lambda": 1.0,
       "W": [[1.0]], "W_s": [[0.0]], "b": [0.0]}]}})");
    auto r = s.run("verify all --config " + s.path("bad_lambda.json").string());
    CHECK(r.code == 1);
}

TEST_CASE("phase: verdicts and series file") {
    auto& s = scratch();
    write_file(s.path("phase_quick.json"), R"({"steps": {"total": 800, "burn_in": 300}})");
    auto r = s.run("phase --config " + s.path("phase_quick.json").string() + " --output " +
                   s.path("phase.csv").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("state_enabled: LimitCycle") != std::string::npos);
    CHECK(r.out.find("period=50") != std::string::npos);
    CHECK(r.out.find("state_disabled: FixedPoint") != std::string::npos);
    const std::string csv = read_file(s.path("phase.csv"));
    CHECK(csv.find("variant,t,p1,p2\n") == 0);
    CHECK(csv.find("state_disabled,300,0,0") != std::string::npos);
}

TEST_CASE("retention: one series file per decay factor, half-life printed") {
    auto& s = scratch();
    write_file(s.path("retention_quick.json"), R"({"retention": {"steps": 200}})");
    auto r = s.run("retention --config " + s.path("retention_quick.json").string() +
                   " --output " + s.path("retention.csv").string());
    CHECK(r.code == 0);
    CHECK(fs::exists(s.path("retention_lambda0.5.csv")));
    CHECK(fs::exists(s.path("retention_lambda0.9.csv")));
    CHECK(fs::exists(s.path("retention_lambda0.99.csv")));
    CHECK(r.out.find("lambda=0.99: half_life=69") != std::string::npos);
    const std::string csv = read_file(s.path("retention_lambda0.5.csv"));
    CHECK(csv.find("t,norm_s,lambda\n") == 0);
    CHECK(csv.find("1,0.5,") != std::string::npos);
}

TEST_CASE("track: stateful beats stateless on the reference signal") {
    auto& s = scratch();
    write_file(s.path("track_quick.json"), R"({"steps": {"total": 1500, "transient": 500}})");
    auto r = s.run("track --config " + s.path("track_quick.json").string() + " --output " +
                   s.path("track.csv").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("stateful_tracks_better: yes") != std::string::npos);
    const std::string csv = read_file(s.path("track.csv"));
    CHECK(csv.find("t,r,y_stateless,y_stateful\n") == 0);
    CHECK(count_lines(csv) == 1501);
}

TEST_CASE("track: identical configs give byte-identical outputs") {
    auto& s = scratch();
    write_file(s.path("track_det.json"), R"({"steps": {"total": 800, "transient": 200}})");
    auto r1 = s.run("track --config " + s.path("track_det.json").string() + " --output " +
                    s.path("det1.csv").string());
    auto r2 = s.run("track --config " + s.path("track_det.json").string() + " --output " +
                    s.path("det2.csv").string());
    CHECK(r1.code == 0);
    CHECK(r2.code == 0);
    CHECK(read_file(s.path("det1.csv")) == read_file(s.path("det2.csv")));
    CHECK(r1.out == r2.out);
}

TEST_CASE("track: the seed flag reaches the generator") {
    auto& s = scratch();
    write_file(s.path("track_seed.json"), R"({"steps": {"total": 800, "transient": 200}})");
    auto base = s.run("track --config " + s.path("track_seed.json").string() + " --output " +
                      s.path("seed42.csv").string());
    auto other = s.run("track --config " + s.path("track_seed.json").string() +
                       " --seed 43 --output " + s.path("seed43.csv").string());
    CHECK(base.code == 0);
    CHECK(other.code == 0);
    CHECK(read_file(s.path("seed42.csv")) != read_file(s.path("seed43.csv")));
}

TEST_CASE("bench: quick run reports the ratio and flat memory") {
    auto& s = scratch();
    write_file(s.path("bench_quick.json"), R"({"bench": {
      "total": 5000, "window": 500, "early_start": 500, "late_start": 4000}})");
    auto r = s.run("bench --config " + s.path("bench_quick.json").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("late_over_early_ratio") != std::string::npos);
    CHECK(r.out.find("memory_constant: yes") != std::string::npos);
}

TEST_CASE("bench: a one-step run does not divide by zero") {
    auto& s = scratch();
    auto r = s.run("bench --steps 1");
    CHECK(r.code == 0);
    CHECK(r.out.find("steps: 1") != std::string::npos);
}

TEST_CASE("print-config emits the effective JSON config") {
    auto& s = scratch();
    auto r = s.run("track --print-config");
    CHECK(r.code == 0);
    CHECK(!r.out.empty());
    CHECK(r.out[0] == '{');
    CHECK(r.out.find("\"noise_std\": 0.3") != std::string::npos);
}

TEST_CASE("usage errors exit with the config code") {
    auto& s = scratch();
    CHECK(s.run("").code == 1);
    CHECK(s.run("frobnicate").code == 1);
    CHECK(s.run("run --no-such-flag").code == 1);
}

TEST_CASE("missing input file is an io error") {
    auto& s = scratch();
    auto r = s.run("run --input " + s.path("does_not_exist.txt").string());
    CHECK(r.code == 2);
}
