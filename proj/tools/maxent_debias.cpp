// maxent-debias: encode tabular data, fit a fairness-adjusted max-entropy
// distribution, sample synthetic datasets and evaluate fairness/closeness
// metrics. File formats and exit codes are documented in FORMATS.md.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maxent/maxent.hpp"

namespace fs = std::filesystem;
using maxent::json;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct ConfigError : maxent::Error {
    using maxent::Error::Error;
};

struct PipelineConfig {
    fs::path schema_path;
    fs::path data_path;              // raw CSV (pipeline input, evaluate reference)
    std::optional<fs::path> encoded_path;  // defaults to <output_dir>/encoded.csv
    double tau = 1.0;
    double c = 0.5;
    maxent::MarginalKind marginal_kind = maxent::MarginalKind::Balanced;
    double epsilon = 1e-3;
    double gradient_tolerance = 1e-8;
    maxent::SolverMode solver_mode = maxent::SolverMode::DampedNewton;
    int max_iterations = 500;
    std::int64_t sample_count = 10000;
    std::uint64_t seed = 0;
    fs::path output_dir = "out";
    int label_value = 1;
};

maxent::MarginalKind parse_marginal_kind(const std::string& s) {
    if (s == "empirical") return maxent::MarginalKind::Empirical;
    if (s == "reweighted") return maxent::MarginalKind::Reweighted;
    if (s == "balanced") return maxent::MarginalKind::Balanced;
    throw ConfigError("marginal_kind must be empirical|reweighted|balanced, got '" + s + "'");
}

maxent::SolverMode parse_solver_mode(const std::string& s) {
    if (s == "damped_newton") return maxent::SolverMode::DampedNewton;
    if (s == "box_newton") return maxent::SolverMode::BoxNewton;
    throw ConfigError("solver_mode must be damped_newton|box_newton, got '" + s + "'");
}

PipelineConfig load_config(const fs::path& path) {
    json j;
    try {
        j = maxent::read_json_file(path);
    } catch (const maxent::Error& e) {
        throw ConfigError(e.what());
    }
    PipelineConfig cfg;
    try {
        cfg.schema_path = j.at("schema_path").get<std::string>();
        cfg.data_path = j.at("data_path").get<std::string>();
        if (j.contains("encoded_path")) cfg.encoded_path = j["encoded_path"].get<std::string>();
        cfg.tau = j.value("tau", 1.0);
        cfg.c = j.value("C", 0.5);
        if (j.contains("marginal_kind"))
            cfg.marginal_kind = parse_marginal_kind(j["marginal_kind"].get<std::string>());
        cfg.epsilon = j.value("epsilon", 1e-3);
        cfg.gradient_tolerance = j.value("gradient_tolerance", 1e-8);
        if (j.contains("solver_mode"))
            cfg.solver_mode = parse_solver_mode(j["solver_mode"].get<std::string>());
        cfg.max_iterations = j.value("max_iterations", 500);
        cfg.sample_count = j.value("sample_count", std::int64_t{10000});
        cfg.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
        cfg.label_value = j.value("label_value", 1);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    if (!(cfg.tau > 0.0) || cfg.tau > 1.0) throw ConfigError("tau must be in (0, 1]");
    if (!(cfg.c > 0.0) || cfg.c > 1.0)
        throw ConfigError("C must be in (0, 1]; C = 0 breaks the full-support guarantee");
    if (cfg.sample_count < 1) throw ConfigError("sample_count must be >= 1");
    if (cfg.label_value != 0 && cfg.label_value != 1)
        throw ConfigError("label_value must be 0 or 1");
    // paths in the config are relative to the config file
    const auto base = path.parent_path();
    if (cfg.schema_path.is_relative()) cfg.schema_path = base / cfg.schema_path;
    if (cfg.data_path.is_relative()) cfg.data_path = base / cfg.data_path;
    if (cfg.encoded_path && cfg.encoded_path->is_relative())
        cfg.encoded_path = base / *cfg.encoded_path;
    return cfg;
}

fs::path encoded_path_of(const PipelineConfig& cfg) {
    return cfg.encoded_path.value_or(cfg.output_dir / "encoded.csv");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

struct EncodeResult {
    fs::path encoded_path;
    fs::path summary_path;
    std::size_t bad_rows = 0;
};

EncodeResult run_encode(const fs::path& schema_path, const fs::path& data_path,
                        const fs::path& out_dir, bool skip_bad,
                        std::optional<fs::path> encoded_target = std::nullopt) {
    const auto schema = maxent::schema_from_json(maxent::read_json_file(schema_path));
    std::vector<maxent::RowError> errors;
    const auto ds = maxent::read_raw_csv_file(schema, data_path, skip_bad, &errors);
    for (const auto& e : errors)
        std::cerr << "warning: skipped row " << e.row << ": " << e.message << "\n";
    if (ds.size() == 0) throw maxent::EmptyDataset();

    fs::create_directories(out_dir);
    std::ostringstream enc;
    maxent::write_encoded_csv(schema, ds, enc);
    EncodeResult res;
    res.encoded_path = encoded_target.value_or(out_dir / "encoded.csv");
    res.bad_rows = errors.size();
    fs::create_directories(res.encoded_path.parent_path());
    maxent::write_file_atomic(res.encoded_path, enc.str());

    json summary;
    summary["N"] = ds.total();
    summary["distinct_points"] = ds.size();
    summary["d"] = schema.dimension();
    summary["skipped_rows"] = errors.size();
    json per_block = json::array();
    for (int b = 0; b < schema.block_count(); ++b) {
        std::vector<std::int64_t> counts(schema.block(b).cardinality, 0);
        for (std::size_t i = 0; i < ds.size(); ++i)
            counts[schema.block_value(ds.point(i), b)] += ds.frequency(i);
        json cj;
        cj["name"] = schema.block(b).name;
        cj["counts"] = counts;
        per_block.push_back(std::move(cj));
    }
    summary["blocks"] = std::move(per_block);
    res.summary_path = out_dir / "encode_summary.json";
    maxent::write_file_atomic(res.summary_path, summary.dump(2) + "\n");
    return res;
}

struct TrainResult {
    fs::path model_path;
    fs::path report_path;
};

TrainResult run_train(const PipelineConfig& cfg, const fs::path& out_dir,
                      const fs::path& encoded_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto schema = maxent::schema_from_json(maxent::read_json_file(cfg.schema_path));
    std::ifstream in(encoded_path);
    if (!in) throw maxent::Error("cannot open " + encoded_path.string());
    const auto ds = maxent::read_encoded_csv(schema, in);

    const auto w = maxent::reweight(ds, schema, cfg.tau);
    const auto theta = maxent::target_marginal(ds, &w, cfg.marginal_kind, schema);
    auto prior = maxent::mix_prior(cfg.c, schema, w);

    maxent::SolverConfig scfg;
    scfg.epsilon = cfg.epsilon;
    scfg.mode = cfg.solver_mode;
    scfg.max_iterations = cfg.max_iterations;
    scfg.gradient_tolerance = cfg.gradient_tolerance;
    const auto result = maxent::solve(prior, theta, scfg);

    fs::create_directories(out_dir);
    TrainResult res;
    res.model_path = out_dir / "model.json";
    maxent::write_file_atomic(res.model_path,
                              maxent::model_to_json(result.model, &result, cfg.solver_mode)
                                      .dump(2) +
                                  "\n");

    const double eta = maxent::validate_interior(theta);
    json report;
    report["iterations"] = result.iterations;
    report["converged"] = result.converged;
    report["dual_value"] = result.model.dual_value;
    report["final_gradient_norm"] = result.final_gradient_norm;
    report["eta"] = eta;
    report["bounding_radius"] = maxent::bounding_radius(schema.dimension(), eta, cfg.c);
    report["lambda_norm"] = result.model.lambda.norm();
    report["wall_clock_seconds"] = seconds_since(t0);
    res.report_path = out_dir / "train_report.json";
    maxent::write_file_atomic(res.report_path, report.dump(2) + "\n");
    return res;
}

struct SampleResult {
    fs::path samples_path;
    fs::path meta_path;
};

SampleResult run_sample(const fs::path& model_path, std::int64_t count, std::uint64_t seed,
                        const fs::path& out_dir) {
    const auto model_bytes = maxent::read_file(model_path);
    const auto model = maxent::model_from_json(json::parse(model_bytes));
    const auto ds = maxent::sample_dataset(model, count, seed);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    maxent::write_decoded_csv(model.schema(), ds, csv);
    SampleResult res;
    res.samples_path = out_dir / "samples.csv";
    maxent::write_file_atomic(res.samples_path, csv.str());

    json meta;
    meta["seed"] = seed;
    meta["count"] = count;
    meta["model_path"] = model_path.string();
    meta["model_hash"] = "fnv1a64:" + maxent::fnv1a_hex(model_bytes);
    res.meta_path = out_dir / "samples_meta.json";
    maxent::write_file_atomic(res.meta_path, meta.dump(2) + "\n");
    return res;
}

json report_to_json(const maxent::FairnessReport& r) {
    json j;
    j["representation_rate"] = r.representation_rate;
    j["statistical_rate"] = r.statistical_rate;
    j["group_mass"] = r.group_mass;
    j["group_conditional"] = r.group_conditional;
    j["label_value"] = r.label_value;
    j["source"] = r.source == maxent::ReportSource::ExactDistribution ? "exact" : "empirical";
    return j;
}

struct EvaluateOptions {
    std::optional<fs::path> model_path;
    std::optional<fs::path> samples_path;
    std::optional<fs::path> schema_path;  // required with --samples
    fs::path reference_path;
    int label_value = 1;
    bool prior_only = false;
    std::uint64_t seed = 0;
};

fs::path run_evaluate(const EvaluateOptions& opt, const fs::path& out_dir) {
    std::optional<maxent::MaxEntModel> model;
    maxent::DomainSchema schema;
    if (opt.model_path) {
        model = maxent::model_from_json(maxent::read_json_file(*opt.model_path));
        schema = model->schema();
        if (opt.prior_only) {
            // evaluate the prior itself: the Gibbs tilt at λ = 0 is the prior
            model->lambda.setZero();
            model->dual_value = 0.0;
        }
    } else {
        schema = maxent::schema_from_json(maxent::read_json_file(*opt.schema_path));
    }
    const auto reference = maxent::read_raw_csv_file(schema, opt.reference_path);

    json report;
    report["label_value"] = opt.label_value;
    report["reference"] = report_to_json(
        maxent::fairness_report(reference, schema, opt.label_value));

    const bool enumerable = schema.log_domain_size() <= 20.0 * std::log(2.0);
    std::string closeness_kind;
    double closeness = 0.0;
    maxent::FairnessReport subject;
    if (model) {
        subject = maxent::fairness_report(*model, opt.label_value);
        if (enumerable) {
            closeness_kind = "kl_divergence";
            closeness = maxent::kl_divergence_smoothed(*model, reference);
        } else {
            // KL needs full enumeration; fall back to the covariance metric on
            // a seeded synthetic sample of the model
            std::cerr << "notice: domain too large for KL, reporting covariance norm on a "
                         "10000-point sample\n";
            closeness_kind = "covariance_difference_norm";
            const auto sampled = maxent::sample_dataset(*model, 10000, opt.seed);
            closeness = maxent::covariance_difference_norm(sampled, reference, schema);
        }
        if (!opt.prior_only && model->prior.tau()) {
            const auto bound =
                maxent::fairness_bound(*model, opt.label_value, *model->prior.tau());
            report["bound"] = json{{"delta", bound.delta},
                                   {"tau_prime", bound.tau_prime},
                                   {"hypothesis_ok", bound.hypothesis_ok}};
        }
    } else {
        const auto samples = maxent::read_raw_csv_file(schema, *opt.samples_path);
        subject = maxent::fairness_report(samples, schema, opt.label_value);
        if (enumerable) {
            closeness_kind = "kl_divergence";
            closeness = maxent::kl_divergence_smoothed(samples, reference, schema);
        } else {
            closeness_kind = "covariance_difference_norm";
            closeness = maxent::covariance_difference_norm(samples, reference, schema);
        }
    }
    report["subject"] = report_to_json(subject);
    report["closeness"] = json{{"kind", closeness_kind}, {"value", closeness}};

    const auto& ref = report["reference"];
    std::printf("%-28s %12s %12s\n", "metric", "raw data", "subject");
    std::printf("%-28s %12.4f %12.4f\n", "data statistical rate",
                ref["statistical_rate"].get<double>(), subject.statistical_rate);
    std::printf("%-28s %12.4f %12.4f\n", "data representation rate",
                ref["representation_rate"].get<double>(), subject.representation_rate);
    std::printf("%-28s %12.4f %12.4f\n",
                (closeness_kind == "kl_divergence" ? "kl divergence vs raw"
                                                   : "covariance diff norm"),
                0.0, closeness);

    fs::create_directories(out_dir);
    const auto report_path = out_dir / "report.json";
    maxent::write_file_atomic(report_path, report.dump(2) + "\n");
    return report_path;
}

int run_pipeline(const PipelineConfig& cfg, bool skip_bad) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path out = cfg.output_dir;
    const auto enc = run_encode(cfg.schema_path, cfg.data_path, out, skip_bad, encoded_path_of(cfg));
    const auto trained = run_train(cfg, out, enc.encoded_path);
    const auto sampled = run_sample(trained.model_path, cfg.sample_count, cfg.seed, out);

    EvaluateOptions eval;
    eval.model_path = trained.model_path;
    eval.reference_path = cfg.data_path;
    eval.label_value = cfg.label_value;
    eval.seed = cfg.seed;
    const auto report_path = run_evaluate(eval, out);

    json manifest;
    manifest["seed"] = cfg.seed;
    manifest["artifacts"] = json{{"encoded", enc.encoded_path.string()},
                                 {"model", trained.model_path.string()},
                                 {"train_report", trained.report_path.string()},
                                 {"samples", sampled.samples_path.string()},
                                 {"samples_meta", sampled.meta_path.string()},
                                 {"report", report_path.string()}};
    json hashes;
    for (const auto& [key, value] : manifest["artifacts"].items())
        hashes[key] = "fnv1a64:" + maxent::fnv1a_hex(maxent::read_file(value.get<std::string>()));
    manifest["hashes"] = std::move(hashes);
    manifest["wall_clock_seconds"] = seconds_since(t0);
    maxent::write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int classify_error(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const maxent::NotConverged*>(&e) ||
        dynamic_cast<const maxent::NumericalBreakdown*>(&e) ||
        dynamic_cast<const maxent::QPNotConverged*>(&e) ||
        dynamic_cast<const maxent::NonFiniteInput*>(&e))
        return kExitNumeric;
    if (dynamic_cast<const maxent::Error*>(&e)) return kExitData;
    return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"max-entropy data debiasing pipeline"};
    app.require_subcommand(1);

    std::string schema_path, data_path, config_path, model_path, samples_path, reference_path;
    std::string out_dir = "out";
    std::int64_t count = 10000;
    std::uint64_t seed = 0;
    int label_value = 1;
    bool skip_bad = false;
    bool prior_only = false;
    bool seed_given = false, out_given = false;

    auto* encode = app.add_subcommand("encode", "encode a raw CSV against a schema");
    encode->add_option("--schema", schema_path)->required();
    encode->add_option("--data", data_path)->required();
    encode->add_option("--out", out_dir);
    encode->add_flag("--skip-bad-rows", skip_bad);

    auto* train = app.add_subcommand("train", "fit the max-entropy model from a config");
    train->add_option("--config", config_path)->required();
    train->add_option("--out", out_dir);
    train->add_option("--seed", seed);

    auto* sample = app.add_subcommand("sample", "draw synthetic records from a model");
    sample->add_option("--model", model_path)->required();
    sample->add_option("--count", count);
    sample->add_option("--seed", seed);
    sample->add_option("--out", out_dir);

    auto* evaluate = app.add_subcommand("evaluate", "fairness and closeness metrics");
    evaluate->add_option("--model", model_path);
    evaluate->add_option("--samples", samples_path);
    evaluate->add_option("--schema", schema_path);
    evaluate->add_option("--reference", reference_path)->required();
    evaluate->add_option("--label-value", label_value);
    evaluate->add_flag("--prior-only", prior_only);
    evaluate->add_option("--seed", seed);
    evaluate->add_option("--out", out_dir);

    auto* pipeline = app.add_subcommand("pipeline", "encode, train, sample and evaluate");
    pipeline->add_option("--config", config_path)->required();
    pipeline->add_option("--out", out_dir);
    pipeline->add_option("--seed", seed);
    pipeline->add_flag("--skip-bad-rows", skip_bad);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : kExitConfig;
    }
    seed_given = train->count("--seed") > 0 || pipeline->count("--seed") > 0;
    out_given = train->count("--out") > 0 || pipeline->count("--out") > 0;

    try {
        if (encode->parsed()) {
            run_encode(schema_path, data_path, out_dir, skip_bad);
        } else if (train->parsed()) {
            auto cfg = load_config(config_path);
            if (seed_given) cfg.seed = seed;
            if (out_given) cfg.output_dir = out_dir;
            run_train(cfg, cfg.output_dir, encoded_path_of(cfg));
        } else if (sample->parsed()) {
            if (count < 1) throw ConfigError("--count must be >= 1");
            run_sample(model_path, count, seed, out_dir);
        } else if (evaluate->parsed()) {
            if (model_path.empty() == samples_path.empty())
                throw ConfigError("pass exactly one of --model / --samples");
            if (!samples_path.empty() && schema_path.empty())
                throw ConfigError("--samples needs --schema");
            EvaluateOptions opt;
            if (!model_path.empty()) opt.model_path = model_path;
            if (!samples_path.empty()) opt.samples_path = samples_path;
            if (!schema_path.empty()) opt.schema_path = schema_path;
            opt.reference_path = reference_path;
            opt.label_value = label_value;
            opt.prior_only = prior_only;
            opt.seed = seed;
            run_evaluate(opt, out_dir);
        } else if (pipeline->parsed()) {
            auto cfg = load_config(config_path);
            if (seed_given) cfg.seed = seed;
            if (out_given) cfg.output_dir = out_dir;
            return run_pipeline(cfg, skip_bad);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_error(e);
    }
    return 0;
}
