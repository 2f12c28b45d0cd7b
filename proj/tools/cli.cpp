#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "f2f/cluster.hpp"
#include "f2f/encoder.hpp"
#include "f2f/episodic.hpp"
#include "f2f/pca.hpp"
#include "f2f/report.hpp"
#include "f2f/store.hpp"
#include "f2f/synthetic.hpp"
#include "f2f/trainer.hpp"

namespace f2f::cli {

namespace {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

Json split_entry(const EmbeddingSet& set, const std::string& file) {
    Json subjects = Json::array();
    for (const auto& g : set.group_by_subject()) {
        subjects.push_back(g.subject.str());
    }
    return Json{{"path", file}, {"records", set.size()}, {"subjects", subjects}};
}

struct GenSyntheticArgs {
    std::string spec;
    std::string out_dir;
};

int run_gen_synthetic(const GenSyntheticArgs& a, std::ostream& out) {
    const auto spec = synthetic_spec_from_json(read_json(a.spec));
    const auto splits = generate_synthetic(spec);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    write_store(splits.train, dir / "train.f2fe");
    write_store(splits.val, dir / "val.f2fe");
    write_store(splits.test, dir / "test.f2fe");
    Json manifest{{"tool_version", std::string(tool_version)},
                  {"spec", to_json(spec)},
                  {"splits",
                   {{"train", split_entry(splits.train, "train.f2fe")},
                    {"val", split_entry(splits.val, "val.f2fe")},
                    {"test", split_entry(splits.test, "test.f2fe")}}}};
    write_json(manifest, dir / "manifest.json");
    out << "train " << splits.train.size() << " val " << splits.val.size() << " test " << splits.test.size()
        << "\n";
    return exit_ok;
}

struct TrainArgs {
    std::string config;
    std::string train;
    std::string out_model;
    std::string log;
};

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const auto start = clock_type::now();
    const auto job = train_job_from_json(read_json(a.config));
    const auto inputs = read_store(a.train);
    auto model = EncoderModel::initialize(job.architecture, job.init_seed);
    const auto result = train(std::move(model), inputs, job.train);
    save_checkpoint(result.model, a.out_model);

    std::size_t skipped = 0;
    for (const auto& s : result.report.steps) {
        skipped += s.updated ? 0 : 1;
    }
    if (skipped > 0) {
        err << "warning: " << skipped << " of " << result.report.steps.size()
            << " steps had no surviving triplets and applied no update\n";
    }

    Json log = make_run_report("train", Json{{"job", to_json(job)}, {"train_store", a.train}});
    log["train_report"] = to_json(result.report);
    log["wall_clock_seconds"] = seconds_since(start);
    write_json(log, a.log);
    out << "checksum " << log["train_report"]["final_checksum"].get<std::string>() << "\n";
    return exit_ok;
}

struct EmbedArgs {
    std::string model;
    std::string in;
    std::string out;
    bool l2_normalize = false;
    unsigned threads = 1;
};

int run_embed(const EmbedArgs& a, std::ostream& err) {
    const auto model = load_checkpoint(a.model);
    const auto inputs = read_store(a.in);
    const bool normalize = a.l2_normalize || model.l2_normalize_output();
    const auto result = encode(model, inputs, normalize, a.threads);
    if (result.zero_norm_count > 0) {
        err << "warning: " << result.zero_norm_count << " embeddings had zero norm and were left at zero\n";
    }
    write_store(result.embeddings, a.out);
    return exit_ok;
}

struct MineArgs {
    std::string in;
    std::size_t subjects = 32;
    std::uint64_t seed = 0;
    double alpha = 0.2;
    std::string distance = "euclidean";
};

int run_mine(const MineArgs& a, std::ostream& out) {
    const auto set = read_store(a.in);
    const LossConfig cfg{a.alpha, parse_distance_kind(a.distance)};
    cfg.validate();

    auto rng = Rng::derive(a.seed, {0xba7c});
    const auto pairs = sample_pair_batch(eligible_subjects(set), a.subjects, rng);
    TripletBatch batch{Matrix(pairs.ids.size(), set.dim()), Matrix(pairs.ids.size(), set.dim()), pairs.ids};
    for (std::size_t i = 0; i < pairs.ids.size(); ++i) {
        std::copy(set[pairs.anchors[i]].vector.begin(), set[pairs.anchors[i]].vector.end(),
                  batch.anchors.row(i).begin());
        std::copy(set[pairs.positives[i]].vector.begin(), set[pairs.positives[i]].vector.end(),
                  batch.positives.row(i).begin());
    }
    const auto mined = mine_hard_triplets(batch, cfg, a.seed);
    const auto loss = batch_loss(batch, mined, cfg);

    out << "# batch " << batch.size() << " survivors " << mined.survivors.size() << " dropped "
        << mined.dropped.size() << " mean_loss " << loss.mean_loss << "\n";
    out << "anchor\tpositive\tnegative\td_pos\td_neg\n";
    for (const auto& t : mined.triples) {
        const auto& a_rec = set[pairs.anchors[t.anchor]];
        const auto& p_rec = set[pairs.positives[t.positive]];
        const auto& n_rec = set[pairs.anchors[t.negative]];
        out << a_rec.subject.str() << "/" << a_rec.image << "\t" << p_rec.subject.str() << "/" << p_rec.image
            << "\t" << n_rec.subject.str() << "/" << n_rec.image << "\t"
            << distance<double>(cfg.distance, batch.anchors.row(t.anchor), batch.positives.row(t.positive))
            << "\t" << distance<double>(cfg.distance, batch.anchors.row(t.anchor), batch.anchors.row(t.negative))
            << "\n";
    }
    for (auto i : mined.dropped) {
        const auto& rec = set[pairs.anchors[i]];
        out << "# dropped " << rec.subject.str() << "/" << rec.image << "\n";
    }
    return exit_ok;
}

struct EvalArgs {
    std::string in;
    std::size_t n_way = 20;
    std::size_t k_shot = 1;
    std::vector<std::size_t> hit_rs{1, 5};
    std::size_t episodes = 100;
    std::uint64_t seed = 0;
    std::string distance = "euclidean";
    std::string out;
    unsigned threads = 1;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
    const auto start = clock_type::now();
    EpisodeSpec spec;
    spec.n_way = a.n_way;
    spec.k_shot = a.k_shot;
    spec.hit_rs = a.hit_rs;
    spec.episodes = a.episodes;
    spec.seed = a.seed;
    spec.distance = parse_distance_kind(a.distance);
    spec.validate();

    const auto set = read_store(a.in);
    const auto report = evaluate(set, spec, a.threads);

    Json doc = make_run_report("eval", Json{{"input", a.in}, {"episode_spec", to_json(spec)}});
    doc["seed"] = spec.seed;
    doc["rows"] = Json::array({eval_row(report)});
    doc["wall_clock_seconds"] = seconds_since(start);
    write_json(doc, a.out);
    for (const auto& line : render_table(doc["rows"])) {
        out << line << "\n";
    }
    return exit_ok;
}

struct ClusterArgs {
    std::string in;
    std::size_t bins = 50;
    std::string out;
    std::string report;
    std::string distance = "euclidean";
};

int run_cluster_stats(const ClusterArgs& a, std::ostream& out) {
    const auto start = clock_type::now();
    const auto kind = parse_distance_kind(a.distance);
    const auto set = read_store(a.in);
    const auto stats = cluster_stats(set, kind, a.bins);
    write_histogram_csv(stats, a.out);

    Json doc = make_run_report("cluster-stats",
                               Json{{"input", a.in}, {"bins", a.bins}, {"distance", std::string(to_string(kind))}});
    doc["cluster_stats"] = to_json(stats);
    doc["wall_clock_seconds"] = seconds_since(start);
    write_json(doc, a.report);
    out << "MIASD " << stats.miasd_mean << " +- " << stats.miasd_std << "\n"
        << "MIESD " << stats.miesd_mean << " +- " << stats.miesd_std << "\n";
    return exit_ok;
}

struct ReportArgs {
    std::vector<std::string> merge;
    std::string out;
};

int run_report(const ReportArgs& a, std::ostream& out) {
    std::vector<Json> docs;
    for (const auto& path : a.merge) {
        docs.push_back(read_json(path));
    }
    const auto merged = merge_reports(docs, a.merge);
    write_json(merged, a.out);
    for (const auto& line : merged["table"]) {
        out << line.get<std::string>() << "\n";
    }
    return exit_ok;
}

struct ProjectArgs {
    std::string in;
    std::string out;
};

int run_project(const ProjectArgs& a, std::ostream& err) {
    const auto set = read_store(a.in);
    const auto projection = pca_project(set);
    if (projection.degenerate) {
        err << "warning: input has zero variance; all coordinates are zero\n";
    }
    write_projection_csv(set, projection, a.out);
    return exit_ok;
}

int exit_code_for(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return exit_usage;
        case ErrorCategory::data: return exit_data;
        case ErrorCategory::precondition: return exit_precondition;
    }
    return exit_internal;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Subject fingerprinting toolkit: triplet training, hard-negative mining and "
                 "N-way K-shot retrieval evaluation",
                 "f2f"};
    app.require_subcommand(1);

    GenSyntheticArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate train/val/test input stores");
    gen_cmd->add_option("--spec", gen.spec, "Synthetic spec (JSON)")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train an encoder with triplet loss");
    train_cmd->add_option("--config", tr.config, "Training job (JSON)")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--train", tr.train, "Training input store")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--out-model", tr.out_model, "Checkpoint output path")->required();
    train_cmd->add_option("--log", tr.log, "Training report output path")->required();

    EmbedArgs em;
    auto* embed_cmd = app.add_subcommand("embed", "Encode an input store");
    embed_cmd->add_option("--model", em.model, "Checkpoint")->required()->check(CLI::ExistingFile);
    embed_cmd->add_option("--in", em.in, "Input store")->required()->check(CLI::ExistingFile);
    embed_cmd->add_option("--out", em.out, "Output embedding store")->required();
    embed_cmd->add_flag("--l2-normalize", em.l2_normalize, "Unit-normalise embeddings");
    embed_cmd->add_option("--threads", em.threads, "Worker threads")->check(CLI::PositiveNumber);

    MineArgs mi;
    auto* mine_cmd = app.add_subcommand("mine", "Sample one batch and print its mined hard triplets");
    mine_cmd->add_option("--in", mi.in, "Embedding store")->required()->check(CLI::ExistingFile);
    mine_cmd->add_option("--subjects", mi.subjects, "Subjects per batch")->required();
    mine_cmd->add_option("--seed", mi.seed, "Sampling seed")->required();
    mine_cmd->add_option("--alpha", mi.alpha, "Triplet margin")->required();
    mine_cmd->add_option("--distance", mi.distance, "euclidean | squared_euclidean | cosine_distance");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "N-way K-shot episodic retrieval evaluation");
    eval_cmd->add_option("--in", ev.in, "Embedding store")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--n-way", ev.n_way, "Subjects per episode")->required();
    eval_cmd->add_option("--k-shot", ev.k_shot, "Supports per subject")->required();
    eval_cmd->add_option("--hit-r", ev.hit_rs, "Comma separated R values for Hit@R")->delimiter(',');
    eval_cmd->add_option("--episodes", ev.episodes, "Number of episodes");
    eval_cmd->add_option("--seed", ev.seed, "Episode seed");
    eval_cmd->add_option("--distance", ev.distance, "euclidean | squared_euclidean | cosine_distance");
    eval_cmd->add_option("--out", ev.out, "Report output path")->required();
    eval_cmd->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber);

    ClusterArgs cl;
    auto* cluster_cmd = app.add_subcommand("cluster-stats", "MIASD / MIESD and distance histograms");
    cluster_cmd->add_option("--in", cl.in, "Embedding store")->required()->check(CLI::ExistingFile);
    cluster_cmd->add_option("--bins", cl.bins, "Histogram bins");
    cluster_cmd->add_option("--out", cl.out, "Histogram CSV output path")->required();
    cluster_cmd->add_option("--report", cl.report, "Report output path")->required();
    cluster_cmd->add_option("--distance", cl.distance, "euclidean | squared_euclidean | cosine_distance");

    ReportArgs rp;
    auto* report_cmd = app.add_subcommand("report", "Merge run reports into one table");
    report_cmd->add_option("--merge", rp.merge, "Run reports")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--out", rp.out, "Merged report output path")->required();

    ProjectArgs pj;
    auto* project_cmd = app.add_subcommand("project", "Export a 2-component PCA projection");
    project_cmd->add_option("--in", pj.in, "Embedding store")->required()->check(CLI::ExistingFile);
    project_cmd->add_option("--out", pj.out, "CSV output path")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (gen_cmd->parsed()) return run_gen_synthetic(gen, out);
        if (train_cmd->parsed()) return run_train(tr, out, err);
        if (embed_cmd->parsed()) return run_embed(em, err);
        if (mine_cmd->parsed()) return run_mine(mi, out);
        if (eval_cmd->parsed()) return run_eval(ev, out);
        if (cluster_cmd->parsed()) return run_cluster_stats(cl, out);
        if (report_cmd->parsed()) return run_report(rp, out);
        if (project_cmd->parsed()) return run_project(pj, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.category());
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_usage;
}

}  // namespace f2f::cli
