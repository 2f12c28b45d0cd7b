// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "f2f/cluster.hpp"
#include "f2f/encoder.hpp"
#include "f2f/episodic.hpp"
#include "f2f/report.hpp"
#include "f2f/store.hpp"
#include "f2f/triplet.hpp"
#include "synthetic_benchmark.hpp"
#include "test_support.hpp"

using namespace f2f;
namespace ft = f2f::testing;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

/// Collects failed checks for one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 5) {
            failures_.push_back(what);
        }
        failed_ = failed_ || !ok;
    }
    bool ok() const { return !failed_; }
    std::string summary() const {
        std::string s;
        for (const auto& f : failures_) s += "; " + f;
        return s;
    }

private:
    bool failed_ = false;
    std::vector<std::string> failures_;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

int failures = 0;

void report(const std::string& name, const Check& check, const std::string& detail) {
    std::cout << (check.ok() ? "PASS " : "FAIL ") << name << ": " << detail << check.summary() << std::endl;
    failures += check.ok() ? 0 : 1;
}

// --- gradient --------------------------------------------------------------

void gradient_oracle() {
    const auto t0 = clock_type::now();
    Check check;
    std::mt19937_64 gen(2024);
    const LossConfig cfg{0.2, DistanceKind::euclidean};
    const double h = 1e-4;
    std::size_t checked = 0;
    std::size_t kinks = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v[3] = {ft::random_vector(gen, 16), ft::random_vector(gen, 16), ft::random_vector(gen, 16)};
        const double gap = distance(cfg.distance, v[0], v[1]) - distance(cfg.distance, v[0], v[2]) + cfg.margin;
        if (std::abs(gap) < 1e-3) {
            ++kinks;
            continue;
        }
        const auto an = triplet_loss_grad(v[0], v[1], v[2], cfg).grad;
        const std::vector<double>* g[3] = {&an.anchor, &an.positive, &an.negative};
        double diff2 = 0.0;
        double an2 = 0.0;
        double fd2 = 0.0;
        for (int which = 0; which < 3; ++which) {
            for (std::size_t d = 0; d < 16; ++d) {
                const double keep = v[which][d];
                v[which][d] = keep + h;
                const double up = triplet_loss(v[0], v[1], v[2], cfg);
                v[which][d] = keep - h;
                const double down = triplet_loss(v[0], v[1], v[2], cfg);
                v[which][d] = keep;
                const double fd = (up - down) / (2 * h);
                const double a = (*g[which])[d];
                diff2 += (a - fd) * (a - fd);
                an2 += a * a;
                fd2 += fd * fd;
            }
        }
        const double scale = std::sqrt(std::max(an2, fd2));
        const double rel = scale == 0.0 ? std::sqrt(diff2) : std::sqrt(diff2) / scale;
        worst = std::max(worst, rel);
        check.expect(rel < 1e-4, fmt("triple relative error %.3g", rel));
        ++checked;
    }
    const double secs = seconds_since(t0);
    check.expect(secs < 5.0, fmt("runtime %.2fs", secs));
    report("gradient-oracle", check,
           fmt("%.0f triples checked, %.0f near the kink skipped, worst relative error %.3g, %.3fs",
               static_cast<double>(checked), static_cast<double>(kinks), worst, secs));
}

// --- mining ----------------------------------------------------------------

void mining_oracle() {
    const auto t0 = clock_type::now();
    Check check;
    std::mt19937_64 gen(77);
    std::size_t triples = 0;
    for (int b = 0; b < 50; ++b) {
        const auto batch = ft::random_batch(gen, 16, 8);
        const LossConfig cfg{0.2, DistanceKind::euclidean};
        const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(b);
        const auto mined = mine_hard_triplets(batch, cfg, seed);
        const auto oracle = ft::brute_force_candidates(batch);

        std::vector<std::size_t> want_survivors;
        std::vector<std::size_t> want_dropped;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            check.expect(hard_negative_candidates(batch, cfg, i) == oracle[i], "candidate set differs");
            (oracle[i].empty() ? want_dropped : want_survivors).push_back(i);
        }
        check.expect(mined.survivors == want_survivors, "survivors differ");
        check.expect(mined.dropped == want_dropped, "dropped differ");
        check.expect(mined.triples.size() == mined.survivors.size(), "one triple per survivor");
        for (std::size_t k = 0; k < mined.triples.size(); ++k) {
            const auto& t = mined.triples[k];
            const auto a = ft::row_vector(batch.anchors, t.anchor);
            const double dp = ft::naive_euclidean(a, ft::row_vector(batch.positives, t.positive));
            const double dn = ft::naive_euclidean(a, ft::row_vector(batch.anchors, t.negative));
            check.expect(t.anchor == t.positive, "positive is the anchor's own pair");
            check.expect(batch.ids[t.negative] != batch.ids[t.anchor], "negative shares the anchor subject");
            check.expect(dn <= dp, "hardness violated");
            const auto& cand = oracle[t.anchor];
            check.expect(std::find(cand.begin(), cand.end(), t.negative) != cand.end(), "negative not a candidate");
            ++triples;
        }
        for (double alpha : {0.0, 0.05, 1.0, 10.0}) {
            check.expect(mine_hard_triplets(batch, LossConfig{alpha, DistanceKind::euclidean}, seed) == mined,
                         fmt("output changed with margin %.2f", alpha));
        }
    }
    const double secs = seconds_since(t0);
    check.expect(secs < 5.0, fmt("runtime %.2fs", secs));
    report("mining-oracle", check,
           fmt("50 batches, %.0f triples, candidates equal brute force, margin-invariant, %.3fs",
               static_cast<double>(triples), secs));
}

// --- metrics ---------------------------------------------------------------

void metric_oracle() {
    Check check;
    const auto fixture = import_csv(ft::fixture("episode_n3_k2_d2.csv"), 2);
    EpisodeSpec spec;
    spec.n_way = 3;
    spec.k_shot = 2;
    spec.hit_rs = {1, 2, 3, 6};
    spec.episodes = 40;
    spec.seed = 9;
    const auto rep = evaluate(fixture, spec);

    // hand enumeration: only C's query image matters (see tests/fixtures)
    double sum_recall = 0.0;
    std::map<std::size_t, double> sum_hit;
    std::set<std::string> branches;
    for (std::size_t e = 0; e < spec.episodes; ++e) {
        const auto ep = sample_episode(fixture, spec, e);
        std::string c_query;
        for (const auto& q : ep.queries) {
            if (q.subject.str() == "C") c_query = q.image;
        }
        branches.insert(c_query);
        const bool clean = c_query == "c2";
        const double recall = clean ? 1.0 : 2.0 / 3.0;
        const std::map<std::size_t, double> hits{{1, clean ? 1.0 : 2.0 / 3.0},
                                                 {2, clean ? 1.0 : 2.0 / 3.0},
                                                 {3, 1.0},
                                                 {6, 1.0}};
        check.expect(rep.per_episode[e].recall_at_k == recall, "episode MRe@K differs from hand value");
        check.expect(rep.per_episode[e].hit_at_r == hits, "episode MH@R differs from hand value");
        sum_recall += recall;
        for (const auto& [r, v] : hits) sum_hit[r] += v;
    }
    const double n = static_cast<double>(spec.episodes);
    check.expect(rep.recall_at_k.mean == sum_recall / n, "aggregate MRe@K differs");
    for (const auto& [r, v] : sum_hit) check.expect(rep.hit_at_r.at(r).mean == v / n, "aggregate MH@R differs");
    check.expect(branches.contains("c2") && branches.size() >= 2, "fixture branches not all exercised");

    // recall equals precision on every checked-in fixture
    const auto cluster_fixture = import_csv(ft::fixture("cluster_4x3_d2.csv"), 2);
    std::size_t queries = 0;
    for (const auto* set : {&fixture, &cluster_fixture}) {
        for (std::size_t k = 1; k <= 2; ++k) {
            EpisodeSpec s;
            s.n_way = 3;
            s.k_shot = k;
            s.hit_rs = {1};
            for (std::size_t e = 0; e < 20; ++e) {
                const auto ep = sample_episode(*set, s, e);
                for (std::size_t q = 0; q < ep.queries.size(); ++q) {
                    const auto order = rank_supports(ep, *set, s, q);
                    std::vector<SubjectId> ranked;
                    for (auto i : order) ranked.push_back(ep.supports[i].subject);
                    std::size_t relevant = 0;
                    for (std::size_t i = 0; i < k; ++i) relevant += ranked[i] == ep.queries[q].subject ? 1 : 0;
                    const double precision = static_cast<double>(relevant) / static_cast<double>(k);
                    check.expect(recall_at_k(ranked, ep.queries[q].subject, k) == precision, "recall != precision");
                    ++queries;
                }
            }
        }
    }

    std::mt19937_64 gen(5);
    for (int t = 0; t < 1000; ++t) {
        std::vector<SubjectId> ranked;
        for (int s = 0; s < 6; ++s) {
            for (int k = 0; k < 3; ++k) ranked.emplace_back("s" + std::to_string(s));
        }
        std::shuffle(ranked.begin(), ranked.end(), gen);
        const SubjectId q("s" + std::to_string(gen() % 6));
        int prev = 0;
        for (std::size_t r = 1; r <= ranked.size(); ++r) {
            const int h = hit_at_r(ranked, q, r);
            check.expect(h >= prev, "hit_at_r decreased");
            prev = h;
        }
    }
    report("metric-oracle", check,
           fmt("fixture MRe@2 %.4f MH@1 %.4f MH@3 %.4f exact; recall == precision on %.0f queries; "
               "Hit@R monotone on 1000 rankings",
               rep.recall_at_k.mean, rep.hit_at_r.at(1).mean, rep.hit_at_r.at(3).mean, static_cast<double>(queries)));
}

// --- random baseline ---------------------------------------------------------

/// Equal-tailed 99% acceptance region [lo, hi] for Binomial(n, p).
std::pair<std::size_t, std::size_t> binomial_interval(std::size_t n, double p) {
    auto log_pmf = [&](std::size_t k) {
        const double kd = static_cast<double>(k);
        const double nd = static_cast<double>(n);
        return std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) + kd * std::log(p) +
               (nd - kd) * std::log1p(-p);
    };
    double cdf = 0.0;
    std::size_t lo = 0;
    std::size_t hi = n;
    bool have_lo = false;
    for (std::size_t k = 0; k <= n; ++k) {
        cdf += std::exp(log_pmf(k));
        if (!have_lo && cdf > 0.005) {
            lo = k;
            have_lo = true;
        }
        if (cdf >= 0.995) {
            hi = k;
            break;
        }
    }
    return {lo, hi};
}

void random_baseline() {
    Check check;
    std::string detail;
    // no subject structure at all: every record is an independent gaussian draw
    const auto set = ft::random_set(60, 2, 16, 4242);
    for (std::size_t n_way : {10u, 50u}) {
        EpisodeSpec spec;
        spec.n_way = n_way;
        spec.k_shot = 1;
        spec.hit_rs = {1};
        spec.episodes = 100;
        spec.seed = 3;
        const auto rep = evaluate(set, spec);
        const std::size_t trials = spec.episodes * n_way;
        const double p = 1.0 / static_cast<double>(n_way);
        const auto [lo, hi] = binomial_interval(trials, p);
        const auto hits = static_cast<std::size_t>(std::llround(rep.recall_at_k.mean * static_cast<double>(trials)));
        check.expect(hits >= lo && hits <= hi, "N=" + std::to_string(n_way) + " outside interval");
        detail += fmt("N=%.0f MRe@1 %.4f (hits %.0f, 99%% interval ", static_cast<double>(n_way), rep.recall_at_k.mean,
                      static_cast<double>(hits)) +
                  std::to_string(lo) + ".." + std::to_string(hi) + " of " + std::to_string(trials) + ") ";
    }
    report("random-baseline", check, detail);
}

// --- benchmark: end to end, trend, clusters ---------------------------------

struct TrainedBenchmark {
    ft::BenchmarkRun run;
    EmbeddingSet trained{16};
    EmbeddingSet untrained{16};
    double seconds = 0.0;
};

TrainedBenchmark trained_benchmark() {
    const auto t0 = clock_type::now();
    TrainedBenchmark b;
    b.run = ft::run_benchmark();
    b.trained = encode(b.run.trained.model, b.run.heldout_inputs, false).embeddings;
    b.untrained = encode(b.run.untrained, b.run.heldout_inputs, false).embeddings;
    b.seconds = seconds_since(t0);
    return b;
}

void end_to_end(const TrainedBenchmark& b) {
    const auto t0 = clock_type::now();
    Check check;
    const auto spec = ft::bench_episodes(20);
    const auto trained = evaluate(b.trained, spec);
    const auto untrained = evaluate(b.untrained, spec);
    const double secs = b.seconds + seconds_since(t0);
    check.expect(trained.recall_at_k.mean >= 0.90, "trained below 0.90");
    check.expect(untrained.recall_at_k.mean <= 0.60, "untrained above 0.60");
    check.expect(secs < 120.0, "runtime over 2 minutes");
    report("end-to-end", check,
           fmt("20-way 1-shot MRe@1 trained %.4f (>= 0.90), untrained %.4f (<= 0.60), %.0f held-out subjects, ",
               trained.recall_at_k.mean, untrained.recall_at_k.mean, static_cast<double>(b.trained.subject_count())) +
               fmt("train+eval %.2fs", secs));
}

void trend(const TrainedBenchmark& b) {
    Check check;
    check.expect(b.trained.subject_count() >= 120, "fewer than 120 test subjects");
    std::string detail = std::to_string(b.trained.subject_count()) + " test subjects, MRe@1";
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {20u, 50u, 100u}) {
        const double m = evaluate(b.trained, ft::bench_episodes(n)).recall_at_k.mean;
        check.expect(m <= prev, "MRe@1 increased at n_way " + std::to_string(n));
        detail += fmt(" %.0f-way %.4f", static_cast<double>(n), m);
        prev = m;
    }
    report("subject-count-trend", check, detail);
}

EmbeddingSet affine(const EmbeddingSet& set, double scale, const std::vector<double>& shift) {
    EmbeddingSet out(set.dim());
    for (const auto& r : set.records()) {
        std::vector<float> v(r.vector.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(scale * r.vector[i] + shift[i]);
        out.add(r.subject, r.image, std::move(v));
    }
    return out;
}

void cluster_separation(const TrainedBenchmark& b) {
    Check check;
    const auto s = cluster_stats(b.trained);
    check.expect(s.miesd_mean > 2.0 * s.miasd_mean, "MIESD not above twice MIASD");

    const auto fx = cluster_stats(import_csv(ft::fixture("cluster_4x3_d2.csv"), 2));
    check.expect(std::abs(fx.miasd_mean - 13.0 / 3.0) <= 1e-9, "fixture MIASD mean");
    check.expect(std::abs(fx.miasd_std - std::sqrt(41.0) / 3.0) <= 1e-9, "fixture MIASD std");
    check.expect(std::abs(fx.miesd_mean - 20.0) <= 1e-9, "fixture MIESD mean");
    check.expect(std::abs(fx.miesd_std - std::sqrt(50.0 / 3.0)) <= 1e-9, "fixture MIESD std");

    std::mt19937_64 gen(8);
    double worst = 0.0;
    auto rel = [&](double got, double want, double ref) {
        const double e = std::abs(got - want) / ref;
        worst = std::max(worst, e);
        return e <= 1e-6;
    };
    for (double c : {0.5, 3.0}) {
        const auto shift = ft::random_vector(gen, b.trained.dim(), 2.0);
        const auto moved = cluster_stats(affine(b.trained, 1.0, shift));
        check.expect(rel(moved.miasd_mean, s.miasd_mean, s.miasd_mean) && rel(moved.miesd_mean, s.miesd_mean, s.miesd_mean) &&
                         rel(moved.miasd_std, s.miasd_std, s.miasd_mean) && rel(moved.miesd_std, s.miesd_std, s.miesd_mean),
                     "translation changed the statistics");
        const auto scaled = cluster_stats(affine(b.trained, c, std::vector<double>(b.trained.dim(), 0.0)));
        check.expect(rel(scaled.miasd_mean, c * s.miasd_mean, c * s.miasd_mean) &&
                         rel(scaled.miesd_mean, c * s.miesd_mean, c * s.miesd_mean) &&
                         rel(scaled.miasd_std, c * s.miasd_std, c * s.miasd_mean) &&
                         rel(scaled.miesd_std, c * s.miesd_std, c * s.miesd_mean),
                     "scaling is not equivariant");
    }
    report("cluster-separation", check,
           fmt("trained MIESD %.4f vs MIASD %.4f (ratio %.2f); fixture exact to 1e-9; invariance worst relative %.2g",
               s.miesd_mean, s.miasd_mean, s.miesd_mean / s.miasd_mean, worst));
}

// --- formats ---------------------------------------------------------------

float finite_bits(std::mt19937_64& gen) {
    for (;;) {
        const float f = std::bit_cast<float>(static_cast<std::uint32_t>(gen()));
        if (std::isfinite(f)) return f;
    }
}

bool same_bits(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].subject != b[i].subject || a[i].image != b[i].image) return false;
        if (std::memcmp(a[i].vector.data(), b[i].vector.data(), a.dim() * sizeof(float)) != 0) return false;
    }
    return true;
}

void format_round_trips() {
    Check check;
    ft::TempDir dir("acceptance");
    std::mt19937_64 gen(99);

    EmbeddingSet store(24);
    for (std::size_t r = 0; r < 10000; ++r) {
        std::vector<float> v(24);
        for (auto& x : v) x = finite_bits(gen);
        store.add(SubjectId("subject_" + std::to_string(r % 997)), "img" + std::to_string(r), std::move(v));
    }
    write_store(store, dir / "fuzz.f2fe");
    check.expect(same_bits(read_store(dir / "fuzz.f2fe"), store), "store round trip not bit-exact");
    check.expect(same_bits(parse_csv(format_csv(store), 24), store), "csv round trip not bit-exact");

    std::size_t params = 0;
    for (const auto& arch : {EncoderArchitecture{{100, 100}, Activation::relu},
                             EncoderArchitecture{{32, 64, 128}, Activation::tanh},
                             EncoderArchitecture{{7, 3, 5, 2}, Activation::identity}}) {
        std::vector<float> p(arch.parameter_count());
        for (auto& x : p) x = finite_bits(gen);
        const EncoderModel model(arch, p, arch.activation == Activation::tanh);
        save_checkpoint(model, dir / "m.f2fm");
        const auto back = load_checkpoint(dir / "m.f2fm");
        check.expect(back == model && std::memcmp(back.parameters().data(), p.data(), p.size() * sizeof(float)) == 0,
                     "checkpoint round trip not bit-exact");
        params += p.size();
    }

    // seeded CLI runs, twice into the same paths
    const auto d = [&](const std::string& name) { return (dir / name).string(); };
    write_json(Json{{"n_subjects", 60}, {"seed", 5}}, dir / "spec.json");
    write_json(Json{{"model", {{"layer_dims", {32, 16}}, {"activation", "tanh"}}},
                    {"train", {{"steps", 100}, {"subjects_per_batch", 16}, {"seed", 5}}}},
               dir / "job.json");
    const std::vector<std::vector<std::string>> commands{
        {"gen-synthetic", "--spec", d("spec.json"), "--out-dir", d("data")},
        {"train", "--config", d("job.json"), "--train", d("data/train.f2fe"), "--out-model", d("m.f2fm"), "--log",
         d("log.json")},
        {"embed", "--model", d("m.f2fm"), "--in", d("data/test.f2fe"), "--out", d("emb.f2fe")},
        {"eval", "--in", d("emb.f2fe"), "--n-way", "5", "--k-shot", "2", "--hit-r", "1,5", "--episodes", "50", "--seed",
         "3", "--out", d("eval.json")},
        {"cluster-stats", "--in", d("emb.f2fe"), "--bins", "20", "--out", d("hist.csv"), "--report", d("cs.json")},
        {"report", "--merge", d("eval.json"), d("cs.json"), "--out", d("merged.json")},
        {"project", "--in", d("emb.f2fe"), "--out", d("proj.csv")},
    };
    const std::vector<std::string> files{"data/train.f2fe", "data/val.f2fe", "data/test.f2fe", "data/manifest.json",
                                         "m.f2fm",          "log.json",      "emb.f2fe",       "eval.json",
                                         "hist.csv",        "cs.json",       "merged.json",    "proj.csv"};
    auto run_all = [&] {
        std::map<std::string, std::string> snap;
        for (const auto& cmd : commands) {
            std::ostringstream out;
            std::ostringstream err;
            const int code = cli::cli_main(cmd, out, err);
            check.expect(code == 0, cmd[0] + " exited " + std::to_string(code) + ": " + err.str());
            snap["stdout " + cmd[0]] = out.str();
        }
        for (const auto& f : files) {
            const auto bytes = ft::slurp(dir / f);
            snap[f] = f.ends_with(".json") ? ft::strip_volatile(Json::parse(bytes)).dump(2) : bytes;
        }
        return snap;
    };
    const auto first = run_all();
    const auto second = run_all();
    std::size_t identical = 0;
    for (const auto& [name, content] : first) {
        const bool same = second.at(name) == content;
        check.expect(same, name + " differs between runs");
        identical += same ? 1 : 0;
    }
    report("format-round-trips", check,
           fmt("10000-record store and csv bit-exact; %.0f checkpoint parameters bit-exact; %.0f of %.0f CLI outputs "
               "identical modulo timestamps",
               static_cast<double>(params), static_cast<double>(identical), static_cast<double>(first.size())));
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void()>>> independent{
        {"gradient-oracle", gradient_oracle},
        {"mining-oracle", mining_oracle},
        {"metric-oracle", metric_oracle},
        {"random-baseline", random_baseline},
    };
    auto guarded = [](const char* name, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            std::cout << "FAIL " << name << ": exception " << e.what() << std::endl;
            ++failures;
        }
    };
    for (const auto& [name, fn] : independent) guarded(name, fn);

    try {
        const auto bench = trained_benchmark();
        guarded("end-to-end", [&] { end_to_end(bench); });
        guarded("subject-count-trend", [&] { trend(bench); });
        guarded("cluster-separation", [&] { cluster_separation(bench); });
    } catch (const std::exception& e) {
        for (const char* name : {"end-to-end", "subject-count-trend", "cluster-separation"}) {
            std::cout << "FAIL " << name << ": benchmark training threw " << e.what() << std::endl;
            ++failures;
        }
    }
    guarded("format-round-trips", format_round_trips);

    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
