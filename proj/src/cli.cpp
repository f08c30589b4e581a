#include "qdwh/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qdwh/baselines.hpp"
#include "qdwh/config.hpp"
#include "qdwh/error.hpp"
#include "qdwh/eval.hpp"
#include "qdwh/io.hpp"
#include "qdwh/synth.hpp"
#include "qdwh/trainer.hpp"

namespace qdwh::cli {

BitCodeSet encode_dataset(const ModelParams& params, const Dataset& ds) {
    require_dims(params.input_dim() == ds.feature_dim,
                 "model expects input dim " + std::to_string(params.input_dim()) +
                     ", dataset has " + std::to_string(ds.feature_dim));
    std::vector<std::vector<std::uint8_t>> codes;
    codes.reserve(ds.num_items);
    for (std::size_t i = 0; i < ds.num_items; ++i) {
        Vec x(ds.feature(i), ds.feature(i) + ds.feature_dim);
        codes.push_back(binarize(forward_hash(params, forward_features(params, x))));
    }
    return build_index(codes);
}

namespace {

void require_path(const std::string& path, const std::string& what) {
    if (path.empty()) throw ArgumentError(what + " path missing (flag or config)");
}

Dataset subset_dataset(const Dataset& ds, std::size_t start, std::size_t count) {
    Dataset out;
    out.num_items = count;
    out.feature_dim = ds.feature_dim;
    out.num_classes = ds.num_classes;
    out.features.assign(ds.features.begin() + start * ds.feature_dim,
                        ds.features.begin() + (start + count) * ds.feature_dim);
    out.labels.assign(ds.labels.begin() + start * ds.num_classes,
                      ds.labels.begin() + (start + count) * ds.num_classes);
    return out;
}

std::vector<std::size_t> model_dims(const RunConfig& cfg, std::size_t input_dim) {
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(cfg.rep_dim);
    return dims;
}

io::Checkpoint train_from_config(const RunConfig& cfg, const Dataset& ds) {
    validate_dataset(ds);
    ModelParams start =
        init_params(model_dims(cfg, ds.feature_dim), cfg.code_length, ds.num_classes,
                    cfg.train.seed);
    TrainResult result = train(start, ds, cfg.train);
    io::Checkpoint cp;
    cp.step = result.report.steps;
    cp.params = std::move(result.params);
    cp.config_lines = serialize_run_config(cfg);
    if (!cfg.loss_log_path.empty()) io::write_loss_log(result.report, cfg.loss_log_path);
    return cp;
}

std::vector<RankedList> rank_queries(const ModelParams& params, const Dataset& queries,
                                     const BitCodeSet& set, RankMode mode, std::size_t radius,
                                     std::size_t k) {
    require_dims(params.input_dim() == queries.feature_dim,
                 "model expects input dim " + std::to_string(params.input_dim()) +
                     ", queries have " + std::to_string(queries.feature_dim));
    std::vector<RankedList> rankings;
    rankings.reserve(queries.num_items);
    for (std::size_t i = 0; i < queries.num_items; ++i) {
        Vec x(queries.feature(i), queries.feature(i) + queries.feature_dim);
        rankings.push_back(retrieve(params, x, set, mode, radius, k));
    }
    return rankings;
}

void check_code_length(const ModelParams& params, const BitCodeSet& set) {
    require_dims(params.code_length() == set.code_length,
                 "checkpoint code length " + std::to_string(params.code_length()) +
                     " vs code file " + std::to_string(set.code_length));
}

EvalReport eval_run(const RunConfig& cfg, const std::string& ranking_path) {
    require_path(cfg.dataset_path, "database dataset");
    require_path(cfg.queries_path, "queries");
    require_path(cfg.checkpoint_path, "checkpoint");
    require_path(cfg.codes_path, "codes");
    Dataset db = io::read_dataset(cfg.dataset_path);
    validate_dataset(db);
    Dataset queries = io::read_dataset(cfg.queries_path);
    validate_dataset(queries);
    require_dims(db.num_classes == queries.num_classes, "database vs query class count");
    io::Checkpoint cp = io::read_checkpoint(cfg.checkpoint_path);
    BitCodeSet set = io::read_codes(cfg.codes_path);
    check_code_length(cp.params, set);
    require_dims(set.num_items == db.num_items, "code count vs database size");

    std::vector<RankedList> rankings;
    std::string mode;
    if (!ranking_path.empty()) {
        rankings = io::read_ranking(ranking_path, queries.num_items);
        mode = "ranking-file";
        for (std::size_t i = 0; i < rankings.size(); ++i) {
            if (rankings[i].size() != db.num_items)
                throw Error("ranking for query " + std::to_string(i) + " covers " +
                            std::to_string(rankings[i].size()) + " of " +
                            std::to_string(db.num_items) + " items");
        }
    } else {
        rankings =
            rank_queries(cp.params, queries, set, RankMode::exact, cfg.radius, db.num_items);
        mode = "exact";
    }

    BitCodeSet query_set = encode_dataset(cp.params, queries);
    std::vector<std::vector<std::uint64_t>> query_codes;
    query_codes.reserve(queries.num_items);
    for (std::size_t i = 0; i < queries.num_items; ++i)
        query_codes.emplace_back(query_set.code(i), query_set.code(i) + query_set.words_per_code);

    std::vector<const std::uint8_t*> labels;
    labels.reserve(queries.num_items);
    for (std::size_t i = 0; i < queries.num_items; ++i) labels.push_back(queries.label(i));

    RelevanceJudge judge(db);
    std::vector<std::size_t> ks;
    for (std::size_t k : cfg.precision_ks)
        if (k >= 1 && k <= db.num_items) ks.push_back(k);
    return build_eval_report(labels, rankings, set, query_codes, judge, cfg.truncation, ks, mode);
}

int run_baseline(const RunConfig& base_cfg, BaselineVariant variant, const std::string& outdir) {
    require_path(base_cfg.dataset_path, "database dataset");
    require_path(base_cfg.queries_path, "queries");
    if (outdir.empty()) throw ArgumentError("--outdir is required");
    std::filesystem::create_directories(outdir);

    RunConfig cfg = base_cfg;
    cfg.checkpoint_path = outdir + "/checkpoint.txt";
    cfg.codes_path = outdir + "/codes.qdwh";
    cfg.loss_log_path = variant == BaselineVariant::lsh ? "" : outdir + "/loss.tsv";
    cfg.ranking_path = outdir + "/ranking.tsv";
    cfg.report_path = outdir + "/report.txt";

    Dataset db = io::read_dataset(cfg.dataset_path);
    validate_dataset(db);

    io::Checkpoint cp;
    switch (variant) {
        case BaselineVariant::qadwh: cp = train_from_config(cfg, db); break;
        case BaselineVariant::dwh:
            cp = train_from_config(cfg, db);
            apply_column_mean_weights(cp.params);
            break;
        case BaselineVariant::unweighted:
            cfg.train.freeze_class_weights = true;
            cp = train_from_config(cfg, db);
            break;
        case BaselineVariant::lsh:
            cp.step = 0;
            cp.params =
                lsh_params(db.feature_dim, cfg.code_length, db.num_classes, cfg.train.seed);
            cp.config_lines = serialize_run_config(cfg);
            break;
    }
    io::write_checkpoint(cp, cfg.checkpoint_path);

    BitCodeSet set = encode_dataset(cp.params, db);
    io::write_codes(set, cfg.codes_path);

    Dataset queries = io::read_dataset(cfg.queries_path);
    validate_dataset(queries);
    // rankings must cover the database so the report's PR curve is defined
    std::vector<RankedList> rankings =
        rank_queries(cp.params, queries, set, cfg.mode, cfg.radius, db.num_items);
    io::write_ranking(rankings, cfg.ranking_path);

    EvalReport report = eval_run(cfg, cfg.ranking_path);
    io::write_report(report, cfg.report_path);
    std::cout << baseline_variant_name(variant) << " map " << io::format_double(report.map)
              << '\n';
    return 0;
}

std::vector<std::size_t> parse_size_list_flag(const std::string& value) {
    std::vector<std::size_t> out;
    std::string part;
    std::stringstream ss(value);
    while (std::getline(ss, part, ',')) {
        if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
            throw ArgumentError("bad integer list '" + value + "'");
        out.push_back(static_cast<std::size_t>(std::strtoull(part.c_str(), nullptr, 10)));
    }
    return out;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"query-adaptive weighted hashing: train, encode, retrieve, evaluate"};
    app.require_subcommand(1);

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "generate a Gaussian-cluster dataset");
    struct {
        std::size_t n = 1000;
        std::size_t d = 16;
        std::size_t c = 4;
        double multi_label_prob = 0.0;
        double noise_sigma = 0.3;
        std::uint64_t seed = 1;
        std::string out;
        std::string queries_out;
        std::size_t num_queries = 0;
    } g;
    gen->add_option("--n", g.n, "total items");
    gen->add_option("--d", g.d, "feature dimension");
    gen->add_option("--c", g.c, "number of classes");
    gen->add_option("--multi-label-prob", g.multi_label_prob,
                    "chance of a second label per item");
    gen->add_option("--noise-sigma", g.noise_sigma, "cluster noise");
    gen->add_option("--seed", g.seed, "rng seed");
    gen->add_option("--out", g.out, "dataset output path")->required();
    gen->add_option("--queries-out", g.queries_out,
                    "split the tail into a separate query file");
    gen->add_option("--num-queries", g.num_queries, "query count for --queries-out");

    // shared config + override flags for the pipeline verbs
    struct Flags {
        std::string config;
        std::string dataset;
        std::string queries;
        std::string checkpoint;
        std::string codes;
        std::string loss_log;
        std::string ranking;
        std::string out;
        std::string mode;
        std::string hidden_dims;
        std::string precision_ks;
        std::size_t radius = 0;
        std::size_t k = 0;
        std::size_t truncation = 0;
        std::size_t max_steps = 0;
        std::size_t batch_size = 0;
        std::size_t code_length = 0;
        std::size_t rep_dim = 0;
        std::uint64_t seed = 0;
        double lr = 0.0;
    };
    auto add_common = [](CLI::App* sub, Flags& f) {
        sub->add_option("--config", f.config, "run configuration file");
        sub->add_option("--seed", f.seed, "rng seed override");
    };

    auto* tr = app.add_subcommand("train", "train a model on a dataset");
    Flags tf;
    add_common(tr, tf);
    tr->add_option("--dataset", tf.dataset, "training dataset");
    tr->add_option("--checkpoint", tf.checkpoint, "checkpoint output path");
    tr->add_option("--loss-log", tf.loss_log, "per-step loss log output");
    tr->add_option("--max-steps", tf.max_steps, "training steps override");
    tr->add_option("--batch-size", tf.batch_size, "triplets per step override");
    tr->add_option("--lr", tf.lr, "initial learning rate override");
    tr->add_option("--code-length", tf.code_length, "bits per code override");
    tr->add_option("--rep-dim", tf.rep_dim, "representation width override");
    tr->add_option("--hidden-dims", tf.hidden_dims, "comma-separated hidden widths");

    auto* en = app.add_subcommand("encode", "binarize a dataset with a checkpoint");
    Flags ef;
    add_common(en, ef);
    en->add_option("--checkpoint", ef.checkpoint, "trained checkpoint");
    en->add_option("--dataset", ef.dataset, "dataset to encode");
    en->add_option("--out", ef.out, "codes output path");

    auto* qu = app.add_subcommand("query", "rank database codes for each query");
    Flags qf;
    add_common(qu, qf);
    qu->add_option("--checkpoint", qf.checkpoint, "trained checkpoint");
    qu->add_option("--codes", qf.codes, "database codes file");
    qu->add_option("--queries", qf.queries, "query feature file");
    qu->add_option("--mode", qf.mode, "exact or two-phase");
    qu->add_option("--radius", qf.radius, "two-phase coarse radius");
    qu->add_option("--k", qf.k, "results per query");
    qu->add_option("--out", qf.out, "ranking output path");

    auto* ev = app.add_subcommand("eval", "score rankings against labels");
    Flags vf;
    add_common(ev, vf);
    ev->add_option("--dataset", vf.dataset, "database dataset (labels)");
    ev->add_option("--queries", vf.queries, "query dataset (labels)");
    ev->add_option("--checkpoint", vf.checkpoint, "trained checkpoint");
    ev->add_option("--codes", vf.codes, "database codes file");
    ev->add_option("--ranking", vf.ranking, "ranking file (else ranks in-process)");
    ev->add_option("--truncation", vf.truncation, "AP depth, 0 = full");
    ev->add_option("--precision-ks", vf.precision_ks, "comma-separated precision@k depths");
    ev->add_option("--out", vf.out, "report output path");

    auto* ba = app.add_subcommand("baseline", "run one ablation end to end");
    Flags bf;
    std::string variant_name;
    std::string outdir;
    add_common(ba, bf);
    ba->add_option("--variant", variant_name, "qadwh, dwh, unweighted, or lsh")->required();
    ba->add_option("--dataset", bf.dataset, "database dataset");
    ba->add_option("--queries", bf.queries, "query dataset");
    ba->add_option("--outdir", outdir, "artifact directory")->required();
    ba->add_option("--max-steps", bf.max_steps, "training steps override");
    ba->add_option("--mode", bf.mode, "exact or two-phase");
    ba->add_option("--radius", bf.radius, "two-phase coarse radius");
    ba->add_option("--truncation", bf.truncation, "AP depth, 0 = full");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    auto given = [](CLI::App* sub, const std::string& name) {
        const CLI::Option* opt = sub->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    auto merge = [&given](CLI::App* sub, const Flags& f) {
        RunConfig cfg;
        if (!f.config.empty()) cfg = parse_run_config(f.config);
        if (given(sub, "--dataset")) cfg.dataset_path = f.dataset;
        if (given(sub, "--queries")) cfg.queries_path = f.queries;
        if (given(sub, "--checkpoint")) cfg.checkpoint_path = f.checkpoint;
        if (given(sub, "--codes")) cfg.codes_path = f.codes;
        if (given(sub, "--loss-log")) cfg.loss_log_path = f.loss_log;
        if (given(sub, "--seed")) cfg.train.seed = f.seed;
        if (given(sub, "--max-steps")) cfg.train.max_steps = f.max_steps;
        if (given(sub, "--batch-size")) cfg.train.batch_size = f.batch_size;
        if (given(sub, "--lr")) cfg.train.initial_lr = f.lr;
        if (given(sub, "--code-length")) cfg.code_length = f.code_length;
        if (given(sub, "--rep-dim")) cfg.rep_dim = f.rep_dim;
        if (given(sub, "--hidden-dims")) cfg.hidden_dims = parse_size_list_flag(f.hidden_dims);
        if (given(sub, "--mode")) cfg.mode = parse_rank_mode(f.mode);
        if (given(sub, "--radius")) cfg.radius = f.radius;
        if (given(sub, "--k")) cfg.k = f.k;
        if (given(sub, "--truncation")) cfg.truncation = f.truncation;
        if (given(sub, "--precision-ks")) cfg.precision_ks = parse_size_list_flag(f.precision_ks);
        return cfg;
    };

    try {
        if (gen->parsed()) {
            Dataset ds = gen_synth(g.n, g.d, g.c, g.multi_label_prob, g.noise_sigma, g.seed);
            if (!g.queries_out.empty()) {
                if (g.num_queries == 0 || g.num_queries >= g.n)
                    throw ArgumentError("--num-queries must lie in [1, n-1]");
                io::write_dataset(subset_dataset(ds, 0, g.n - g.num_queries), g.out);
                io::write_dataset(subset_dataset(ds, g.n - g.num_queries, g.num_queries),
                                  g.queries_out);
            } else {
                if (gen->count("--num-queries"))
                    throw ArgumentError("--num-queries needs --queries-out");
                io::write_dataset(ds, g.out);
            }
            std::cout << "wrote " << g.out << '\n';
        } else if (tr->parsed()) {
            RunConfig cfg = merge(tr, tf);
            require_path(cfg.dataset_path, "dataset");
            require_path(cfg.checkpoint_path, "checkpoint");
            Dataset ds = io::read_dataset(cfg.dataset_path);
            io::Checkpoint cp = train_from_config(cfg, ds);
            io::write_checkpoint(cp, cfg.checkpoint_path);
            std::cout << "trained " << cp.step << " steps, wrote " << cfg.checkpoint_path << '\n';
        } else if (en->parsed()) {
            RunConfig cfg = merge(en, ef);
            if (en->count("--out")) cfg.codes_path = ef.out;
            require_path(cfg.checkpoint_path, "checkpoint");
            require_path(cfg.dataset_path, "dataset");
            require_path(cfg.codes_path, "codes output");
            io::Checkpoint cp = io::read_checkpoint(cfg.checkpoint_path);
            Dataset ds = io::read_dataset(cfg.dataset_path);
            validate_dataset(ds);
            io::write_codes(encode_dataset(cp.params, ds), cfg.codes_path);
            std::cout << "wrote " << cfg.codes_path << '\n';
        } else if (qu->parsed()) {
            RunConfig cfg = merge(qu, qf);
            if (qu->count("--out")) cfg.ranking_path = qf.out;
            require_path(cfg.checkpoint_path, "checkpoint");
            require_path(cfg.codes_path, "codes");
            require_path(cfg.queries_path, "queries");
            require_path(cfg.ranking_path, "ranking output");
            io::Checkpoint cp = io::read_checkpoint(cfg.checkpoint_path);
            BitCodeSet set = io::read_codes(cfg.codes_path);
            check_code_length(cp.params, set);
            Dataset queries = io::read_dataset(cfg.queries_path);
            validate_dataset(queries);
            std::vector<RankedList> rankings =
                rank_queries(cp.params, queries, set, cfg.mode, cfg.radius, cfg.k);
            io::write_ranking(rankings, cfg.ranking_path);
            std::cout << "wrote " << cfg.ranking_path << '\n';
        } else if (ev->parsed()) {
            RunConfig cfg = merge(ev, vf);
            if (ev->count("--ranking")) cfg.ranking_path = vf.ranking;
            if (ev->count("--out")) cfg.report_path = vf.out;
            require_path(cfg.report_path, "report output");
            EvalReport report = eval_run(cfg, ev->count("--ranking") ? cfg.ranking_path : "");
            io::write_report(report, cfg.report_path);
            std::cout << "map " << io::format_double(report.map) << ", wrote " << cfg.report_path
                      << '\n';
        } else if (ba->parsed()) {
            RunConfig cfg = merge(ba, bf);
            return run_baseline(cfg, parse_baseline_variant(variant_name), outdir);
        }
        return 0;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace qdwh::cli
