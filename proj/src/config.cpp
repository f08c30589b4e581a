#include "qdwh/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qdwh/error.hpp"
#include "qdwh/io.hpp"

namespace qdwh {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::size_t to_size(const std::string& v, std::size_t line) {
    if (v.empty()) throw ParseError("empty integer value", line);
    for (char ch : v)
        if (ch < '0' || ch > '9') throw ParseError("bad integer value '" + v + "'", line);
    return static_cast<std::size_t>(std::strtoull(v.c_str(), nullptr, 10));
}

double to_double(const std::string& v, std::size_t line) {
    if (v.empty()) throw ParseError("empty numeric value", line);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size()) throw ParseError("bad numeric value '" + v + "'", line);
    return x;
}

std::vector<std::size_t> to_size_list(const std::string& v, std::size_t line) {
    std::vector<std::size_t> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(to_size(trim(part), line));
    return out;
}

std::string join(const std::vector<std::size_t>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(xs[i]);
    }
    return out;
}

}  // namespace

std::string rank_mode_name(RankMode mode) {
    return mode == RankMode::exact ? "exact" : "two-phase";
}

RankMode parse_rank_mode(const std::string& name) {
    if (name == "exact") return RankMode::exact;
    if (name == "two-phase") return RankMode::two_phase;
    throw ArgumentError("mode must be 'exact' or 'two-phase', not '" + name + "'");
}

void apply_config_line(RunConfig& cfg, const std::string& text, std::size_t line) {
    std::size_t eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line);
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));

    if (key == "model.hidden_dims") {
        cfg.hidden_dims = to_size_list(value, line);
    } else if (key == "model.rep_dim") {
        cfg.rep_dim = to_size(value, line);
    } else if (key == "model.code_length") {
        cfg.code_length = to_size(value, line);
    } else if (key == "train.batch_size") {
        cfg.train.batch_size = to_size(value, line);
    } else if (key == "train.initial_lr") {
        cfg.train.initial_lr = to_double(value, line);
    } else if (key == "train.lr_drop_factor") {
        cfg.train.lr_drop_factor = to_double(value, line);
    } else if (key == "train.lr_drop_every") {
        cfg.train.lr_drop_every = to_size(value, line);
    } else if (key == "train.weight_decay") {
        cfg.train.weight_decay = to_double(value, line);
    } else if (key == "train.max_steps") {
        cfg.train.max_steps = to_size(value, line);
    } else if (key == "train.margin") {
        cfg.train.margin = to_double(value, line);
    } else if (key == "train.loss_balance") {
        cfg.train.loss_balance = to_double(value, line);
    } else if (key == "train.seed") {
        cfg.train.seed = to_size(value, line);
    } else if (key == "train.convergence_window") {
        cfg.train.convergence_window = to_size(value, line);
    } else if (key == "train.convergence_tol") {
        cfg.train.convergence_tol = to_double(value, line);
    } else if (key == "retrieval.mode") {
        try {
            cfg.mode = parse_rank_mode(value);
        } catch (const ArgumentError& e) {
            throw ParseError(e.what(), line);
        }
    } else if (key == "retrieval.radius") {
        cfg.radius = to_size(value, line);
    } else if (key == "retrieval.k") {
        cfg.k = to_size(value, line);
    } else if (key == "eval.truncation") {
        cfg.truncation = to_size(value, line);
    } else if (key == "eval.precision_ks") {
        cfg.precision_ks = to_size_list(value, line);
    } else if (key == "paths.dataset") {
        cfg.dataset_path = value;
    } else if (key == "paths.queries") {
        cfg.queries_path = value;
    } else if (key == "paths.checkpoint") {
        cfg.checkpoint_path = value;
    } else if (key == "paths.codes") {
        cfg.codes_path = value;
    } else if (key == "paths.loss_log") {
        cfg.loss_log_path = value;
    } else if (key == "paths.ranking") {
        cfg.ranking_path = value;
    } else if (key == "paths.report") {
        cfg.report_path = value;
    } else {
        throw ParseError("unknown config key '" + key + "'", line);
    }
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    RunConfig cfg;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        std::string t = trim(text);
        if (t.empty() || t[0] == '#') continue;
        apply_config_line(cfg, t, line);
    }
    return cfg;
}

std::vector<std::string> serialize_run_config(const RunConfig& cfg) {
    std::vector<std::string> lines;
    auto add = [&lines](const std::string& k, const std::string& v) {
        lines.push_back(k + " = " + v);
    };
    add("model.hidden_dims", join(cfg.hidden_dims));
    add("model.rep_dim", std::to_string(cfg.rep_dim));
    add("model.code_length", std::to_string(cfg.code_length));
    add("train.batch_size", std::to_string(cfg.train.batch_size));
    add("train.initial_lr", io::format_double(cfg.train.initial_lr));
    add("train.lr_drop_factor", io::format_double(cfg.train.lr_drop_factor));
    add("train.lr_drop_every", std::to_string(cfg.train.lr_drop_every));
    add("train.weight_decay", io::format_double(cfg.train.weight_decay));
    add("train.max_steps", std::to_string(cfg.train.max_steps));
    add("train.margin", io::format_double(cfg.train.margin));
    add("train.loss_balance", io::format_double(cfg.train.loss_balance));
    add("train.seed", std::to_string(cfg.train.seed));
    add("train.convergence_window", std::to_string(cfg.train.convergence_window));
    add("train.convergence_tol", io::format_double(cfg.train.convergence_tol));
    add("retrieval.mode", rank_mode_name(cfg.mode));
    add("retrieval.radius", std::to_string(cfg.radius));
    add("retrieval.k", std::to_string(cfg.k));
    add("eval.truncation", std::to_string(cfg.truncation));
    add("eval.precision_ks", join(cfg.precision_ks));
    add("paths.dataset", cfg.dataset_path);
    add("paths.queries", cfg.queries_path);
    add("paths.checkpoint", cfg.checkpoint_path);
    add("paths.codes", cfg.codes_path);
    add("paths.loss_log", cfg.loss_log_path);
    add("paths.ranking", cfg.ranking_path);
    add("paths.report", cfg.report_path);
    return lines;
}

}  // namespace qdwh
