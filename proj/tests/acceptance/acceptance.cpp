// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Oracles live in tests/oracles.hpp and share no code with the
// library kernels.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "concept_bridge/checkpoint.hpp"
#include "concept_bridge/feature_store.hpp"
#include "concept_bridge/sae.hpp"
#include "concept_bridge/sharedness.hpp"
#include "concept_bridge/similarity.hpp"
#include "concept_bridge/stats.hpp"
#include "concept_bridge/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace concept_bridge;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double round_sig(double v, int digits) {
  const double scale = std::pow(10.0, digits - 1 - std::floor(std::log10(std::abs(v))));
  return std::round(v * scale) / scale;
}

// ---------------------------------------------------------------------------

Outcome flop_accounting() {
  const auto t0 = Clock::now();
  const std::uint64_t big = estimate_flops(24 * 8192, 24 * 8192, 118287);
  const std::uint64_t small = estimate_flops(8192, 8192, 118287);
  const double us = seconds_since(t0) * 1e6;
  const bool ok = round_sig(double(big), 3) == 9.14e15 && round_sig(double(small), 3) == 1.59e13 && us < 1000;
  return {ok, fmt("%llu (9.14e15 to 3 s.f.), %llu (1.59e13), %.1f us", (unsigned long long)big,
                  (unsigned long long)small, us)};
}

Outcome fisher_significance() {
  const auto t0 = Clock::now();
  const double lp = fisher_max_tail_log10({0.3, 8192, 10000});
  const double us = seconds_since(t0) * 1e6;

  const auto t1 = Clock::now();
  const double p = std::pow(10.0, fisher_max_tail_log10({0.2, 50, 200}));
  const std::size_t trials = 10000;
  const auto mc = oracle::max_correlation_tail(0.2, 50, 200, trials, 2024);
  const double se = std::sqrt(p * (1 - p) / trials);
  const double mc_s = seconds_since(t1);
  const double dev = std::abs(mc.p - p) / se;

  const bool ok = lp >= -207 && lp <= -205 && us < 1000 && dev <= 3.0 && mc_s < 30;
  return {ok, fmt("log10 P = %.3f in %.1f us; MC(0.2, 50, 200) = %.4f vs %.4f, %.2f SE, %.1f s", lp, us, mc.p, p, dev,
                  mc_s)};
}

Outcome kernel_oracle() {
  const std::vector<TileConfig> tiles{{128, 256, 256}, {4, 8, 1}, {37, 61, 129}, {512, 64, 2000}};
  std::mt19937_64 gen(31337);
  double worst_err = 0.0, worst_time = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    std::size_t n, fa, fb;
    if (inst == 19) {
      n = 2000, fa = 512, fb = 768;
    } else {
      n = 2 + gen() % 1999;
      fa = 1 + gen() % 512;
      fb = 1 + gen() % 768;
    }
    const auto a = oracle::random_matrix(n, fa, 1000 + inst, 1.0 + inst % 3);
    const auto b = oracle::random_matrix(n, fb, 2000 + inst);
    // naive Pearson via double-precision centered, normalized columns
    auto columns = [](const DenseMatrix& m) {
      std::vector<std::vector<double>> cols(m.cols(), std::vector<double>(m.rows()));
      for (std::size_t j = 0; j < m.cols(); ++j) {
        double mean = 0, ss = 0;
        for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, j);
        mean /= m.rows();
        for (std::size_t r = 0; r < m.rows(); ++r) ss += (m(r, j) - mean) * (m(r, j) - mean);
        const double inv = ss > 0 ? 1.0 / std::sqrt(ss) : 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) cols[j][r] = (m(r, j) - mean) * inv;
      }
      return cols;
    };
    const auto ca = columns(a), cb = columns(b);
    const auto sa = standardize_columns(a).matrix, sb = standardize_columns(b).matrix;
    for (const auto& cfg : tiles) {
      const auto t0 = Clock::now();
      const auto c = blocked_correlation(sa, sb, cfg);
      worst_time = std::max(worst_time, seconds_since(t0));
      for (std::size_t i = 0; i < fa; ++i) {
        for (std::size_t j = 0; j < fb; ++j) {
          double dot = 0;
          for (std::size_t r = 0; r < n; ++r) dot += ca[i][r] * cb[j][r];
          worst_err = std::max(worst_err, std::abs(dot - double(c(i, j))));
        }
      }
    }
  }
  const bool ok = worst_err <= 1e-5 && worst_time < 5.0;
  return {ok, fmt("20 instances x %zu tile configs, max abs err %.2e, slowest kernel call %.2f s", tiles.size(),
                  worst_err, worst_time)};
}

Outcome self_similarity() {
  double worst = 0.0;
  int cases = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto fm = fixtures::random_features(100 + 50 * seed, 16 + 8 * seed, seed, "m");
    const auto r = mppc_pair(fm, fm);
    worst = std::max({worst, std::abs(r.mppc - 1), std::abs(r.wmppc - 1)});
    ++cases;
  }
  // features from an SAE on dictionary data
  DictionaryTask task;
  const auto p = fixtures::random_sae(32, 64, 8, 5);
  auto infer = make_dictionary_activations(task, 500, 3, TokenMode::global_only);
  const auto fm = extract_features(p, infer, SMode::relu);
  const auto r = mppc_pair(fm, fm);
  worst = std::max({worst, std::abs(r.mppc - 1), std::abs(r.wmppc - 1)});
  ++cases;
  return {worst <= 1e-6, fmt("%d matrices, max |mppc - 1|, |wmppc - 1| = %.2e", cases, worst)};
}

Outcome shuffle_baseline_property() {
  const auto t0 = Clock::now();
  DictionaryTask task;
  task.d_in = 64;
  task.n_atoms = 64;
  task.active_per_row = 4;
  const auto train = make_dictionary_activations(task, 50000, 11);
  const auto infer = make_dictionary_activations(task, 2000, 12, TokenMode::global_only);
  TrainConfig cfg;  // F = 8 * 64 = 512, k = 32
  cfg.epochs = 3;
  int passed = 0;
  std::string detail;
  for (std::uint64_t pair = 0; pair < 5; ++pair) {
    cfg.seed = 2 * pair;
    const auto a = train_sae(train, cfg);
    cfg.seed = 2 * pair + 1;
    const auto b = train_sae(train, cfg);
    const auto fa = extract_features(a.params, infer, SMode::relu);
    const auto fb = extract_features(b.params, infer, SMode::relu);
    const double un = mppc_pair(fa, fb).wmppc;
    const double sh = shuffle_baseline(fa, fb, 100 + pair).wmppc;
    const bool ok = un >= 5 * sh && sh < 0.15;
    passed += ok;
    detail += fmt("%s%.3f/%.3f", pair ? ", " : "", un, sh);
  }
  const double s = seconds_since(t0);
  return {passed == 5 && s < 600, fmt("%d/5 pairs pass (unshuffled/shuffled wMPPC: %s), %.0f s", passed,
                                      detail.c_str(), s)};
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  int checked = 0, skipped = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; checked < 50; ++seed) {
    const auto r = fixtures::check_gradients(seed);
    if (r.skipped) {
      ++skipped;
      continue;
    }
    ++checked;
    worst = std::max(worst, r.worst);
  }
  const double s = seconds_since(t0);
  return {worst <= 1e-3 && s < 10, fmt("50 instances (D=4, F=8, k=3; %d skipped near TopK ties), worst rel err %.2e, "
                                       "%.2f s",
                                       skipped, worst, s)};
}

Outcome training_progress() {
  const auto t0 = Clock::now();
  DictionaryTask task;  // D = 32, 64 atoms, 4 active
  const auto acts = make_dictionary_activations(task, 20000, 7);
  TrainConfig cfg;  // F = 256, k = 32, defaults otherwise
  cfg.epochs = 5;
  int ok = 0;
  std::string ratios;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const auto r = train_sae(acts, cfg);
    const double ratio = r.report.epoch_mse.back() / r.report.epoch_mse.front();
    ok += ratio <= 0.2;
    ratios += fmt("%s%.3f", seed ? " " : "", ratio);
  }
  const double s = seconds_since(t0);
  return {ok >= 9 && s < 900, fmt("%d/10 seeds reach final/first MSE <= 0.2 (%s), %.0f s", ok, ratios.c_str(), s)};
}

Outcome sharedness_algebra() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<float> rho(-1, 1), s(0, 100);
  double worst = 0.0;
  const std::size_t triples = 10000;
  std::vector<float> sv(triples), ra(triples), rb(triples);
  for (std::size_t i = 0; i < triples; ++i) {
    sv[i] = s(gen);
    ra[i] = rho(gen);
    rb[i] = rho(gen);
  }
  const std::vector<std::vector<float>> g{ra}, h{rb};
  const auto pair = comparative_sharedness(sv, ra, rb);
  const auto gen_cs = generalized_cs(sv, g, h);
  for (std::size_t i = 0; i < triples; ++i) worst = std::max(worst, std::abs(pair[i] - gen_cs[i]));

  std::vector<double> delta(8192);
  std::normal_distribution<double> nd;
  for (auto& d : delta) d = nd(gen);
  const std::size_t kept = top_fraction(delta, 0.01).size();
  const double s_elapsed = seconds_since(t0);
  return {worst <= 1e-9 && kept == 81 && s_elapsed < 1.0,
          fmt("max |gcs - cs| = %.2e over 1e4 triples; top 1%% of 8192 = %zu; %.3f s", worst, kept, s_elapsed)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

Outcome determinism() {
  const fixtures::TempDir dir("accept_det");
  const auto file = [&](const std::string& n) { return dir.file(n); };
  DictionaryTask task;
  task.d_in = 16;
  task.n_atoms = 32;
  write_activations(file("train.acts"), make_dictionary_activations(task, 2000, 1));
  for (int layer = 0; layer < 2; ++layer) {
    auto infer = make_dictionary_activations(task, 300, 2 + layer, TokenMode::global_only);
    infer.layer = layer;
    write_activations(file("infer" + std::to_string(layer) + ".acts"), infer);
  }

  struct Step {
    std::string name;
    std::string args;                  // with {o} as the per-run output prefix
    std::vector<std::string> outputs;  // file suffixes to compare
    bool compare_stdout;
  };
  const std::string common_train = " --acts " + file("train.acts") + " --k 4 --expansion 4 --epochs 2 --lr 1e-3";
  std::vector<Step> steps;
  for (const char* m : {"a", "b", "c"}) {
    const std::string seed = std::to_string(m[0] - 'a' + 1);
    steps.push_back({std::string("train ") + m,
                     "train" + common_train + " --seed " + seed + " --out {o}" + m + ".sae --json {o}" + m + ".json",
                     {std::string(m) + ".sae", std::string(m) + ".json"},
                     false});
    for (int layer = 0; layer < 2; ++layer) {
      const std::string l = std::to_string(layer);
      steps.push_back({std::string("features ") + m + l,
                       "features --sae {o}" + std::string(m) + ".sae --acts " + file("infer" + l + ".acts") +
                           " --s-mode relu --out {o}" + m + l + ".feat",
                       {std::string(m) + l + ".feat"},
                       true});
    }
  }
  steps.push_back({"wmppc", "wmppc --src {o}a0.feat --tgt {o}b0.feat --json {o}w.json --rho-csv {o}w.csv",
                   {"w.json", "w.csv"}, true});
  steps.push_back({"grid", "grid --src {o}a0.feat {o}a1.feat --tgt {o}b0.feat {o}b1.feat --out {o}g.csv", {"g.csv"},
                   true});
  steps.push_back({"sharedness",
                   "sharedness --model {o}a0.feat --a {o}b0.feat --b {o}c0.feat --fraction 0.05 --out {o}cs.csv "
                   "--manifest {o}cs.json --all-rows",
                   {"cs.csv", "cs.json"},
                   true});
  steps.push_back({"gcs",
                   "gcs --model {o}a0.feat --group-g {o}b0.feat {o}b1.feat --group-h {o}c0.feat --out {o}gcs.csv "
                   "--manifest {o}gcs.json",
                   {"gcs.csv", "gcs.json"},
                   true});
  steps.push_back({"significance", "significance --x 0.3 --n-targets 8192 --n-samples 10000 --json {o}sig.json",
                   {"sig.json"}, true});
  steps.push_back({"shuffle-baseline", "shuffle-baseline --src {o}a0.feat --tgt {o}b0.feat --seed 7 --json {o}sh.json",
                   {"sh.json"}, true});
  steps.push_back({"flops", "flops --src-features 196608 --tgt-features 196608 --n 118287", {}, true});
  steps.push_back({"report", "report --src {o}a0.feat {o}b0.feat {o}c0.feat --csv {o}r.csv --json {o}r.json",
                   {"r.csv", "r.json"}, true});
  steps.push_back({"report --all-layers",
                   "report --src {o}a0.feat {o}a1.feat --tgt {o}b0.feat {o}b1.feat --all-layers --csv {o}ra.csv "
                   "--json {o}ra.json",
                   {"ra.csv", "ra.json"},
                   true});
  steps.push_back({"inspect", "inspect {o}a.sae {o}a0.feat " + file("train.acts"), {}, true});

  const std::vector<std::pair<std::string, std::string>> runs{{"r1_", "1"}, {"r2_", "4"}};
  int identical = 0;
  std::string failures;
  for (const auto& step : steps) {
    bool same = true;
    std::vector<std::string> stdouts;
    for (const auto& [prefix, threads] : runs) {
      std::string args = step.args;
      for (std::size_t pos; (pos = args.find("{o}")) != std::string::npos;) args.replace(pos, 3, file(prefix));
      const std::string out = file(prefix + "stdout.txt");
      const std::string cmd =
          std::string(CB_CLI_PATH) + " " + args + " --threads " + threads + " > " + out + " 2> " + file("stderr.txt");
      if (std::system(cmd.c_str()) != 0) {
        same = false;
        failures += " " + step.name + "(exit)";
        break;
      }
      stdouts.push_back(slurp(out));
    }
    if (same) {
      for (const auto& o : step.outputs) same = same && slurp(file("r1_" + o)) == slurp(file("r2_" + o)) &&
                                                !slurp(file("r1_" + o)).empty();
      if (step.compare_stdout) {
        // path prefixes differ between runs; compare with them normalized
        for (auto& s : stdouts)
          for (const auto& [prefix, _] : runs)
            for (std::size_t pos; (pos = s.find(file(prefix))) != std::string::npos;) s.replace(pos, file(prefix).size(), "");
        same = same && stdouts[0] == stdouts[1];
      }
      if (!same) failures += " " + step.name;
    }
    identical += same;
  }
  return {identical == int(steps.size()),
          fmt("%d/%zu subcommand runs bytewise identical at --threads 1 vs 4%s%s", identical, steps.size(),
              failures.empty() ? "" : "; differing:", failures.c_str())};
}

Outcome format_round_trip() {
  const auto t0 = Clock::now();
  const fixtures::TempDir dir("accept_rt");
  std::mt19937_64 gen(4242);
  auto random_values = [&](std::size_t n) {
    std::vector<float> v(n);
    std::uniform_int_distribution<std::uint32_t> bits;
    for (auto& x : v) {
      do {
        const std::uint32_t b = bits(gen);
        std::memcpy(&x, &b, 4);
      } while (!std::isfinite(x));
    }
    return v;
  };
  int ok = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t rows = 1 + gen() % 64, cols = 1 + gen() % 48;
    bool same = true;
    switch (i % 3) {
      case 0: {
        ActivationMatrix a;
        a.data = DenseMatrix(rows, cols, random_values(rows * cols));
        a.model_id = "model-" + std::to_string(gen() % 1000) + " \"quoted\" \xc3\xa9";
        a.layer = static_cast<std::int64_t>(gen() % 48);
        a.dataset_id = "ds" + std::to_string(i);
        a.token_mode = gen() % 2 ? TokenMode::all_tokens : TokenMode::global_only;
        a.global_token_kind = "cls";
        const auto path = dir.file("x.acts");
        write_activations(path, a);
        const auto b = read_activations(path);
        same = serialize_activations(b) == serialize_activations(a) &&
               std::memcmp(a.data.values().data(), b.data.values().data(), rows * cols * 4) == 0 &&
               b.model_id == a.model_id && b.layer == a.layer && b.token_mode == a.token_mode;
        break;
      }
      case 1: {
        FeatureMatrix f;
        f.data = DenseMatrix(rows, cols, random_values(rows * cols));
        f.s_vector = random_values(cols);
        f.model_id = "m" + std::to_string(i);
        f.layer = i;
        f.dataset_id = "ds";
        f.sae_checkpoint_hash = "abcdef0123456789";
        f.s_mode = static_cast<SMode>(gen() % 3);
        f.k = 1 + gen() % cols;
        if (gen() % 2) {
          for (std::size_t c = 0; c < cols; ++c) f.column_layers.push_back(static_cast<std::int64_t>(c % 3));
        }
        const auto path = dir.file("x.feat");
        write_features(path, f);
        const auto g = read_features(path);
        same = serialize_features(g) == serialize_features(f) &&
               std::memcmp(f.s_vector.data(), g.s_vector.data(), cols * 4) == 0 && g.column_layers == f.column_layers &&
               g.s_mode == f.s_mode && g.k == f.k;
        break;
      }
      default: {
        const std::size_t d = 1 + gen() % 16, e = 1 + gen() % 8;
        SaeParams p;
        p.d_in = d;
        p.n_features = d * e;
        p.k = 1 + gen() % p.n_features;
        p.expansion_factor = e;
        p.w_enc = DenseMatrix(d, d * e, random_values(d * d * e));
        p.w_dec = DenseMatrix(d * e, d, random_values(d * d * e));
        p.b_dec = random_values(d);
        TrainConfig cfg;
        cfg.seed = gen();
        cfg.k = p.k;
        cfg.expansion_factor = e;
        const auto path = dir.file("x.sae");
        save_checkpoint(path, {p, cfg});
        const auto back = load_checkpoint(path);
        same = back.params == p && back.config.seed == cfg.seed && [&] {
                 const auto bytes = serialize_checkpoint(back);
                 return std::string(bytes.begin(), bytes.end()) == slurp(path);
               }();
        break;
      }
    }
    ok += same;
  }
  const double s = seconds_since(t0);
  return {ok == 100 && s < 10, fmt("%d/100 .acts/.feat/.sae instances bitwise identical after write+read, %.2f s", ok,
                                   s)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"flop-accounting", flop_accounting},
      {"fisher-significance", fisher_significance},
      {"correlation-kernel-oracle", kernel_oracle},
      {"self-similarity", self_similarity},
      {"shuffle-baseline", shuffle_baseline_property},
      {"gradient-correctness", gradient_correctness},
      {"training-progress", training_progress},
      {"sharedness-algebra", sharedness_algebra},
      {"determinism", determinism},
      {"format-round-trip", format_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %-26s %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
