#include "f2f/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>

#include "binary_io.hpp"

namespace f2f {

namespace {

class FieldReader {
public:
    FieldReader(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
        if (!j_.is_object()) {
            throw InvalidSpecError(context_ + " must be a JSON object");
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        used_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidSpecError(context_ + "." + key + ": " + e.what());
        }
    }

    const Json* sub(const char* key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.contains(it.key())) {
                throw InvalidSpecError(context_ + ": unknown key '" + it.key() + "'");
            }
        }
    }

private:
    const Json& j_;
    std::string context_;
    std::set<std::string> used_;
};

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

Json to_json(const SyntheticSpec& spec) {
    return Json{{"n_subjects", spec.n_subjects},       {"images_per_subject", spec.images_per_subject},
                {"input_dim", spec.input_dim},         {"cluster_std", spec.cluster_std},
                {"center_scale", spec.center_scale},   {"scramble", spec.scramble},
                {"seed", spec.seed}};
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
    SyntheticSpec spec;
    FieldReader r(j, "synthetic spec");
    r.get("n_subjects", spec.n_subjects);
    r.get("images_per_subject", spec.images_per_subject);
    r.get("input_dim", spec.input_dim);
    r.get("cluster_std", spec.cluster_std);
    r.get("center_scale", spec.center_scale);
    r.get("scramble", spec.scramble);
    r.get("seed", spec.seed);
    r.finish();
    spec.validate();
    return spec;
}

Json to_json(const EncoderArchitecture& arch) {
    return Json{{"layer_dims", arch.layer_dims}, {"activation", std::string(to_string(arch.activation))}};
}

EncoderArchitecture architecture_from_json(const Json& j) {
    EncoderArchitecture arch{{32, 64, 128}, Activation::relu};
    FieldReader r(j, "model");
    r.get("layer_dims", arch.layer_dims);
    std::string act(to_string(arch.activation));
    r.get("activation", act);
    r.finish();
    arch.activation = parse_activation(act);
    arch.validate();
    return arch;
}

Json to_json(const TrainConfig& cfg) {
    return Json{{"subjects_per_batch", cfg.subjects_per_batch},
                {"steps", cfg.steps},
                {"learning_rate", cfg.learning_rate},
                {"optimizer",
                 {{"kind", std::string(to_string(cfg.optimizer.kind))},
                  {"beta1", cfg.optimizer.beta1},
                  {"beta2", cfg.optimizer.beta2},
                  {"epsilon", cfg.optimizer.epsilon}}},
                {"loss", {{"margin", cfg.loss.margin}, {"distance", std::string(to_string(cfg.loss.distance))}}},
                {"seed", cfg.seed},
                {"l2_normalize_output", cfg.l2_normalize_output}};
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig cfg;
    FieldReader r(j, "train");
    r.get("subjects_per_batch", cfg.subjects_per_batch);
    r.get("steps", cfg.steps);
    r.get("learning_rate", cfg.learning_rate);
    r.get("seed", cfg.seed);
    r.get("l2_normalize_output", cfg.l2_normalize_output);
    if (const Json* opt = r.sub("optimizer")) {
        FieldReader o(*opt, "train.optimizer");
        std::string kind(to_string(cfg.optimizer.kind));
        o.get("kind", kind);
        o.get("beta1", cfg.optimizer.beta1);
        o.get("beta2", cfg.optimizer.beta2);
        o.get("epsilon", cfg.optimizer.epsilon);
        o.finish();
        cfg.optimizer.kind = parse_optimizer(kind);
    }
    if (const Json* loss = r.sub("loss")) {
        FieldReader l(*loss, "train.loss");
        std::string dist(to_string(cfg.loss.distance));
        l.get("margin", cfg.loss.margin);
        l.get("distance", dist);
        l.finish();
        cfg.loss.distance = parse_distance_kind(dist);
    }
    r.finish();
    cfg.validate();
    return cfg;
}

Json to_json(const EpisodeSpec& spec) {
    return Json{{"n_way", spec.n_way},       {"k_shot", spec.k_shot}, {"hit_rs", spec.hit_rs},
                {"episodes", spec.episodes}, {"seed", spec.seed},     {"distance", std::string(to_string(spec.distance))}};
}

Json to_json(const TrainJob& job) {
    return Json{{"model", to_json(job.architecture)}, {"train", to_json(job.train)}, {"init_seed", job.init_seed}};
}

TrainJob train_job_from_json(const Json& j) {
    TrainJob job;
    FieldReader r(j, "train job");
    if (const Json* m = r.sub("model")) {
        job.architecture = architecture_from_json(*m);
    }
    if (const Json* t = r.sub("train")) {
        job.train = train_config_from_json(*t);
    }
    r.get("init_seed", job.init_seed);
    r.finish();
    return job;
}

Json to_json(const TrainReport& report) {
    Json losses = Json::array();
    Json survivors = Json::array();
    Json dropped = Json::array();
    Json updated = Json::array();
    Json seconds = Json::array();
    for (const auto& s : report.steps) {
        losses.push_back(s.mean_loss);
        survivors.push_back(s.survivors);
        dropped.push_back(s.dropped);
        updated.push_back(s.updated);
        seconds.push_back(s.seconds);
    }
    char checksum[24];
    std::snprintf(checksum, sizeof checksum, "%016llx", static_cast<unsigned long long>(report.final_checksum));
    return Json{{"steps", report.steps.size()},
                {"mean_loss", losses},
                {"survivors", survivors},
                {"dropped", dropped},
                {"updated", updated},
                {"final_checksum", checksum},
                {"wall_clock_seconds", {{"per_step", seconds}, {"total", report.total_seconds}}}};
}

Json eval_row(const AggregateReport& report) {
    Json m_hit = Json::object();
    Json s_hit = Json::object();
    for (const auto& [r, summary] : report.hit_at_r) {
        m_hit[std::to_string(r)] = summary.mean;
        s_hit[std::to_string(r)] = summary.std;
    }
    return Json{{"setting", report.spec.label()},
                {"n_way", report.spec.n_way},
                {"k_shot", report.spec.k_shot},
                {"episodes", report.spec.episodes},
                {"m_recall_at_k", report.recall_at_k.mean},
                {"std_recall_at_k", report.recall_at_k.std},
                {"m_hit_at_r", m_hit},
                {"std_hit_at_r", s_hit}};
}

Json to_json(const ClusterStats& stats) {
    auto hist = [](const Histogram& h) { return Json{{"edges", h.edges}, {"counts", h.counts}}; };
    return Json{{"miasd_mean", stats.miasd_mean},
                {"miasd_std", stats.miasd_std},
                {"miesd_mean", stats.miesd_mean},
                {"miesd_std", stats.miesd_std},
                {"intra_subjects", stats.intra_subjects},
                {"inter_pairs", stats.inter_pairs},
                {"subjects", stats.per_subject_mean.size()},
                {"intra_histogram", hist(stats.intra_histogram)},
                {"inter_histogram", hist(stats.inter_histogram)}};
}

Json make_run_report(std::string_view kind, Json config) {
    return Json{{"tool_version", std::string(tool_version)},
                {"kind", std::string(kind)},
                {"timestamp", utc_timestamp()},
                {"config", std::move(config)}};
}

std::vector<std::string> render_table(const Json& rows) {
    std::set<std::size_t> rs;
    for (const auto& row : rows) {
        for (auto it = row.at("m_hit_at_r").begin(); it != row.at("m_hit_at_r").end(); ++it) {
            rs.insert(std::stoul(it.key()));
        }
    }
    auto pct = [](double v) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%6.2f", 100.0 * v);
        return std::string(buf);
    };
    std::string header = "N-way - K-shot |  MRe@K";
    for (auto r : rs) {
        char buf[16];
        std::snprintf(buf, sizeof buf, " | %6s", ("MH@" + std::to_string(r)).c_str());
        header += buf;
    }
    std::vector<std::string> lines{header, std::string(header.size(), '-')};
    for (const auto& row : rows) {
        char label[24];
        std::snprintf(label, sizeof label, "%-14s", row.at("setting").get<std::string>().c_str());
        std::string line = std::string(label) + " | " + pct(row.at("m_recall_at_k").get<double>());
        const auto& hits = row.at("m_hit_at_r");
        for (auto r : rs) {
            const auto key = std::to_string(r);
            line += " | " + (hits.contains(key) ? pct(hits.at(key).get<double>()) : std::string("     -"));
        }
        lines.push_back(line);
    }
    return lines;
}

Json merge_reports(const std::vector<Json>& reports, const std::vector<std::string>& sources) {
    Json rows = Json::array();
    Json clusters = Json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& rep = reports[i];
        const std::string source = i < sources.size() ? sources[i] : std::to_string(i);
        if (auto it = rep.find("rows"); it != rep.end()) {
            for (const auto& row : *it) {
                rows.push_back(row);
            }
        }
        if (auto it = rep.find("cluster_stats"); it != rep.end()) {
            clusters.push_back(Json{{"source", source}, {"stats", *it}});
        }
    }
    Json out = make_run_report("merged", Json{{"sources", sources}});
    out["table"] = render_table(rows);
    out["rows"] = std::move(rows);
    out["cluster_stats"] = std::move(clusters);
    return out;
}

void write_json(const Json& doc, const std::filesystem::path& path) {
    detail::write_file_atomic(path, doc.dump(2) + "\n");
}

Json read_json(const std::filesystem::path& path) {
    const auto text = detail::read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace f2f
