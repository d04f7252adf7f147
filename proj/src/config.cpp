#include "camrl/config.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace camrl {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const char* where) {
    if (!obj.is_object()) throw config_error(std::string(where) + ": expected an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known)
            throw config_error(std::string(where) + ": unknown key '" + item.key() + "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error(std::string("config key '") + key + "': " + e.what());
    }
}

SuiteSpec parse_suite(const json& j) {
    reject_unknown(j, {"tiers"}, "suite");
    SuiteSpec spec;
    if (!j.contains("tiers")) return SuiteSpec::defaults();
    if (!j.at("tiers").is_array()) throw config_error("suite.tiers: expected an array");
    for (const json& tj : j.at("tiers")) {
        reject_unknown(tj, {"count", "width", "height", "obstacles", "slip_prob", "max_steps"},
                       "suite tier");
        SuiteSpec::Tier tier;
        read(tj, "count", tier.count);
        read(tj, "width", tier.width);
        read(tj, "height", tier.height);
        read(tj, "obstacles", tier.obstacles);
        read(tj, "slip_prob", tier.slip_prob);
        read(tj, "max_steps", tier.max_steps);
        spec.tiers.push_back(tier);
    }
    return spec;
}

json suite_to_json(const SuiteSpec& spec) {
    json tiers = json::array();
    for (const auto& t : spec.tiers)
        tiers.push_back({{"count", t.count},
                         {"width", t.width},
                         {"height", t.height},
                         {"obstacles", t.obstacles},
                         {"slip_prob", t.slip_prob},
                         {"max_steps", t.max_steps}});
    return {{"tiers", tiers}};
}

HyperConfig parse_hyper(const json& j) {
    reject_unknown(j,
                   {"a", "b", "c", "d", "mu1", "mu2", "radius", "epsilon", "episodes_per_epoch",
                    "warmup_epochs", "fw_iters", "eval_episodes"},
                   "hyper");
    HyperConfig hp;
    read(j, "a", hp.a);
    read(j, "b", hp.b);
    read(j, "c", hp.c);
    read(j, "d", hp.d);
    read(j, "mu1", hp.mu1);
    read(j, "mu2", hp.mu2);
    read(j, "radius", hp.radius);
    read(j, "epsilon", hp.epsilon);
    read(j, "episodes_per_epoch", hp.episodes_per_epoch);
    read(j, "warmup_epochs", hp.warmup_epochs);
    read(j, "fw_iters", hp.fw_iters);
    read(j, "eval_episodes", hp.eval_episodes);
    return hp;
}

json hyper_to_json(const HyperConfig& hp) {
    return {{"a", hp.a},
            {"b", hp.b},
            {"c", hp.c},
            {"d", hp.d},
            {"mu1", hp.mu1},
            {"mu2", hp.mu2},
            {"radius", hp.radius},
            {"epsilon", hp.epsilon},
            {"episodes_per_epoch", hp.episodes_per_epoch},
            {"warmup_epochs", hp.warmup_epochs},
            {"fw_iters", hp.fw_iters},
            {"eval_episodes", hp.eval_episodes}};
}

AblationFlags parse_ablations(const json& j) {
    reject_unknown(j,
                   {"disable_mode_switch", "force_parallel", "term1_off", "term2_off", "c_zero",
                    "d_zero", "lambda2_zero", "lambda3_zero", "lambda4_zero", "freeze_lambda",
                    "fixed_lambda"},
                   "ablations");
    AblationFlags f;
    read(j, "disable_mode_switch", f.disable_mode_switch);
    read(j, "force_parallel", f.force_parallel);
    read(j, "term1_off", f.term1_off);
    read(j, "term2_off", f.term2_off);
    read(j, "c_zero", f.c_zero);
    read(j, "d_zero", f.d_zero);
    read(j, "lambda2_zero", f.lambda2_zero);
    read(j, "lambda3_zero", f.lambda3_zero);
    read(j, "lambda4_zero", f.lambda4_zero);
    read(j, "freeze_lambda", f.freeze_lambda);
    read(j, "fixed_lambda", f.fixed_lambda);
    return f;
}

json ablations_to_json(const AblationFlags& f) {
    return {{"disable_mode_switch", f.disable_mode_switch},
            {"force_parallel", f.force_parallel},
            {"term1_off", f.term1_off},
            {"term2_off", f.term2_off},
            {"c_zero", f.c_zero},
            {"d_zero", f.d_zero},
            {"lambda2_zero", f.lambda2_zero},
            {"lambda3_zero", f.lambda3_zero},
            {"lambda4_zero", f.lambda4_zero},
            {"freeze_lambda", f.freeze_lambda},
            {"fixed_lambda", f.fixed_lambda}};
}

ImulBranch parse_branch(const std::string& s) {
    if (s == "curriculum-when-below") return ImulBranch::CurriculumWhenBelow;
    if (s == "parallel-when-below") return ImulBranch::ParallelWhenBelow;
    throw config_error("imul_branch: expected 'curriculum-when-below' or 'parallel-when-below'");
}

SimilarityMeasure parse_similarity(const std::string& s) {
    if (s == "critic-cosine") return SimilarityMeasure::CriticCosine;
    if (s == "embedding-distance") return SimilarityMeasure::EmbeddingDistance;
    throw config_error("similarity: expected 'critic-cosine' or 'embedding-distance'");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    reject_unknown(j,
                   {"seed", "epochs", "suite", "hidden1", "hidden2", "learning_rate", "discount",
                    "hyper", "imul_branch", "imul_weights", "similarity", "ablations", "prior_ranks",
                    "output_dir"},
                   "config");
    RunConfig cfg;
    read(j, "seed", cfg.seed);
    read(j, "epochs", cfg.epochs);
    if (j.contains("suite")) cfg.suite = parse_suite(j.at("suite"));
    read(j, "hidden1", cfg.hidden1);
    read(j, "hidden2", cfg.hidden2);
    read(j, "learning_rate", cfg.learning_rate);
    read(j, "discount", cfg.discount);
    if (j.contains("hyper")) cfg.hyper = parse_hyper(j.at("hyper"));
    if (j.contains("imul_branch")) cfg.imul_branch = parse_branch(j.at("imul_branch").get<std::string>());
    read(j, "imul_weights", cfg.imul_weights);
    if (j.contains("similarity"))
        cfg.similarity = parse_similarity(j.at("similarity").get<std::string>());
    if (j.contains("ablations")) cfg.ablations = parse_ablations(j.at("ablations"));
    if (j.contains("prior_ranks") && !j.at("prior_ranks").is_null()) {
        const json& pj = j.at("prior_ranks");
        if (!pj.is_array()) throw config_error("prior_ranks: expected an array");
        PriorKnowledge prior;
        for (const json& v : pj) {
            if (v.is_null())
                prior.ranks.push_back(std::nullopt);
            else if (v.is_number_integer())
                prior.ranks.push_back(v.get<int>());
            else
                throw config_error("prior_ranks: entries must be integers or null");
        }
        cfg.prior = std::move(prior);
    }
    read(j, "output_dir", cfg.output_dir);
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["epochs"] = config.epochs;
    j["suite"] = suite_to_json(config.suite);
    j["hidden1"] = config.hidden1;
    j["hidden2"] = config.hidden2;
    j["learning_rate"] = config.learning_rate;
    j["discount"] = config.discount;
    j["hyper"] = hyper_to_json(config.hyper);
    j["imul_branch"] = config.imul_branch == ImulBranch::CurriculumWhenBelow
                           ? "curriculum-when-below"
                           : "parallel-when-below";
    j["imul_weights"] = config.imul_weights;
    j["similarity"] = config.similarity == SimilarityMeasure::CriticCosine ? "critic-cosine"
                                                                           : "embedding-distance";
    j["ablations"] = ablations_to_json(config.ablations);
    if (config.prior.has_value()) {
        json pj = json::array();
        for (const auto& r : config.prior->ranks) {
            if (r.has_value())
                pj.push_back(*r);
            else
                pj.push_back(nullptr);
        }
        j["prior_ranks"] = pj;
    }
    j["output_dir"] = config.output_dir;
    return j.dump(2);
}

std::string serialize_epoch_record(const EpochRecord& record) {
    json j;
    j["epoch"] = record.epoch;
    j["mode"] = mode_name(record.mode);
    if (record.imul.has_value()) {
        j["imul"] = record.imul->value;
        j["imul_terms"] =
            json::array({record.imul->epoch_decay, record.imul->progress, record.imul->dispersion});
    } else {
        j["imul"] = nullptr;
        j["imul_terms"] = nullptr;
    }
    j["u"] = record.u.has_value() ? json(*record.u) : json(nullptr);
    j["lambda"] = record.lambda;
    j["selected_task"] = record.selected_task.has_value() ? json(*record.selected_task) : json(nullptr);
    j["fw_objective"] = record.fw_objective.has_value() ? json(*record.fw_objective) : json(nullptr);
    j["policy_loss"] = record.policy_loss;
    j["eval_reward"] = record.eval_reward;
    j["B"] = record.b_row_major;
    j["PR"] = record.pr_row_major;
    return j.dump();
}

EpochRecord parse_epoch_record(const std::string& json_line) {
    json j;
    try {
        j = json::parse(json_line);
    } catch (const json::exception& e) {
        throw config_error(std::string("metrics parse error: ") + e.what());
    }
    reject_unknown(j,
                   {"epoch", "mode", "imul", "imul_terms", "u", "lambda", "selected_task",
                    "fw_objective", "policy_loss", "eval_reward", "B", "PR"},
                   "metrics record");
    EpochRecord r;
    read(j, "epoch", r.epoch);
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "parallel")
        r.mode = Mode::Parallel;
    else if (mode == "curriculum")
        r.mode = Mode::Curriculum;
    else
        throw config_error("metrics record: unknown mode '" + mode + "'");
    if (!j.at("imul").is_null()) {
        ImulTerms t;
        t.value = j.at("imul").get<double>();
        const json& terms = j.at("imul_terms");
        if (!terms.is_array() || terms.size() != 3)
            throw config_error("metrics record: imul_terms must have 3 entries");
        t.epoch_decay = terms[0].get<double>();
        t.progress = terms[1].get<double>();
        t.dispersion = terms[2].get<double>();
        r.imul = t;
    }
    if (!j.at("u").is_null()) r.u = j.at("u").get<double>();
    read(j, "lambda", r.lambda);
    if (!j.at("selected_task").is_null()) r.selected_task = j.at("selected_task").get<int>();
    if (!j.at("fw_objective").is_null()) r.fw_objective = j.at("fw_objective").get<double>();
    read(j, "policy_loss", r.policy_loss);
    read(j, "eval_reward", r.eval_reward);
    read(j, "B", r.b_row_major);
    read(j, "PR", r.pr_row_major);
    return r;
}

std::string serialize_run_summary(const RunSummary& summary) {
    json j;
    j["task_count"] = summary.task_count;
    j["epochs_run"] = summary.epochs_run;
    j["final_eval"] = summary.final_eval;
    j["final_policy_loss"] = summary.final_policy_loss;
    j["B"] = summary.b_row_major;
    j["PR"] = summary.pr_row_major;
    return j.dump(2);
}

void write_summary_csv(std::ostream& out, const RunSummary& summary) {
    out << "task,final_eval_reward,final_policy_loss\n";
    std::ostringstream row;
    for (int i = 0; i < summary.task_count; ++i) {
        row.str("");
        row << i << ',' << json(summary.final_eval[static_cast<std::size_t>(i)]).dump() << ','
            << json(summary.final_policy_loss[static_cast<std::size_t>(i)]).dump() << '\n';
        out << row.str();
    }
    double mean_eval = 0.0;
    double mean_loss = 0.0;
    for (int i = 0; i < summary.task_count; ++i) {
        mean_eval += summary.final_eval[static_cast<std::size_t>(i)];
        mean_loss += summary.final_policy_loss[static_cast<std::size_t>(i)];
    }
    mean_eval /= summary.task_count;
    mean_loss /= summary.task_count;
    out << "mean," << json(mean_eval).dump() << ',' << json(mean_loss).dump() << '\n';
}

}  // namespace camrl
