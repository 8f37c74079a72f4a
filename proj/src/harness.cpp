#include "sagnn/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sagnn/metrics.hpp"
#include "sagnn/random.hpp"

namespace sagnn::harness {
namespace {

using nlohmann::json;

constexpr std::uint64_t kDatasetStream = 31;
constexpr std::uint64_t kBaselineStreamBase = 100;
constexpr const char* kAggregateId = "ALL";

std::ostream* g_log = nullptr;

void log_line(const std::string& s) {
    if (g_log != nullptr) *g_log << s << std::endl;
}

// Copies every present key, rejecting unknown ones so typos fail loudly.
template <typename Fn>
void read_section(const json& j, const std::string& section, const std::set<std::string>& keys, Fn&& fn) {
    if (!j.is_object()) throw std::invalid_argument("config: '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!keys.count(key)) throw std::invalid_argument("config: unknown key '" + section + "." + key + "'");
        try {
            fn(key, value);
        } catch (const json::exception& e) {
            throw std::invalid_argument("config: bad value for '" + section + "." + key + "': " + e.what());
        }
    }
}

json to_json(const RunConfig& c) {
    json reqs = json::array();
    for (const auto& r : c.requirements) reqs.push_back({{"delta", r.delta}, {"resilience", r.resilience}});
    return {
        {"dataset",
         {{"train_count", c.dataset.train_count},
          {"test_count", c.dataset.test_count},
          {"n_min", c.dataset.n_min},
          {"n_max", c.dataset.n_max},
          {"radius_factor", c.dataset.radius_factor},
          {"seed", c.dataset.seed}}},
        {"arch",
         {{"layers", c.arch.layers},
          {"features", c.arch.features},
          {"order", c.arch.order},
          {"leaky_slope", c.arch.leaky_slope},
          {"shift", to_string(c.arch.shift)},
          {"norm_momentum", c.arch.norm_momentum},
          {"norm_epsilon", c.arch.norm_epsilon},
          {"eval_stats", to_string(c.arch.eval_stats)}}},
        {"train",
         {{"epochs", c.train.epochs},
          {"primal_lr", c.train.primal_lr},
          {"dual_samples_per_graph", c.train.dual_samples_per_graph},
          {"lambda_max", c.train.lambda_max},
          {"zero_mask_fraction", c.train.zero_mask_fraction},
          {"max_mask_fraction", c.train.max_mask_fraction},
          {"seed", c.train.seed},
          {"eval_every", c.train.eval_every}}},
        {"exec",
         {{"horizon", c.exec.horizon}, {"eta_dual", c.exec.eta_dual}, {"dual_signal", to_string(c.exec.dual_signal)}}},
        {"requirements", reqs},
        {"held_out_eval", c.held_out_eval},
        {"held_out_graphs", c.held_out_graphs},
        {"baseline", {{"seed", c.baseline_seed}, {"persistence_exponent", c.persistence_exponent}}},
        {"write_traces", c.write_traces},
        {"data_dir", c.data_dir.string()},
        {"out_dir", c.out_dir.string()},
    };
}

RunConfig from_json(const json& j) {
    RunConfig c;
    read_section(j, "config",
                 {"dataset", "arch", "train", "exec", "requirements", "held_out_eval", "held_out_graphs", "baseline",
                  "write_traces", "data_dir", "out_dir"},
                 [&](const std::string& key, const json& v) {
                     if (key == "dataset") {
                         read_section(v, key, {"train_count", "test_count", "n_min", "n_max", "radius_factor", "seed"},
                                      [&](const std::string& k, const json& x) {
                                          auto& d = c.dataset;
                                          if (k == "train_count") d.train_count = x.get<std::size_t>();
                                          if (k == "test_count") d.test_count = x.get<std::size_t>();
                                          if (k == "n_min") d.n_min = x.get<std::size_t>();
                                          if (k == "n_max") d.n_max = x.get<std::size_t>();
                                          if (k == "radius_factor") d.radius_factor = x.get<double>();
                                          if (k == "seed") d.seed = x.get<std::uint64_t>();
                                      });
                     } else if (key == "arch") {
                         read_section(v, key,
                                      {"layers", "features", "order", "leaky_slope", "shift", "norm_momentum",
                                       "norm_epsilon", "eval_stats"},
                                      [&](const std::string& k, const json& x) {
                                          auto& a = c.arch;
                                          if (k == "layers") a.layers = x.get<std::size_t>();
                                          if (k == "features") a.features = x.get<std::size_t>();
                                          if (k == "order") a.order = x.get<std::size_t>();
                                          if (k == "leaky_slope") a.leaky_slope = x.get<double>();
                                          if (k == "shift") a.shift = parse_shift_kind(x.get<std::string>());
                                          if (k == "norm_momentum") a.norm_momentum = x.get<double>();
                                          if (k == "norm_epsilon") a.norm_epsilon = x.get<double>();
                                          if (k == "eval_stats") a.eval_stats = parse_norm_stats(x.get<std::string>());
                                      });
                     } else if (key == "train") {
                         read_section(v, key,
                                      {"epochs", "primal_lr", "dual_samples_per_graph", "lambda_max",
                                       "zero_mask_fraction", "max_mask_fraction", "seed", "eval_every"},
                                      [&](const std::string& k, const json& x) {
                                          auto& t = c.train;
                                          if (k == "epochs") t.epochs = x.get<std::size_t>();
                                          if (k == "primal_lr") t.primal_lr = x.get<double>();
                                          if (k == "dual_samples_per_graph") t.dual_samples_per_graph = x.get<std::size_t>();
                                          if (k == "lambda_max") t.lambda_max = x.get<double>();
                                          if (k == "zero_mask_fraction") t.zero_mask_fraction = x.get<double>();
                                          if (k == "max_mask_fraction") t.max_mask_fraction = x.get<double>();
                                          if (k == "seed") t.seed = x.get<std::uint64_t>();
                                          if (k == "eval_every") t.eval_every = x.get<std::size_t>();
                                      });
                     } else if (key == "exec") {
                         read_section(v, key, {"horizon", "eta_dual", "dual_signal"},
                                      [&](const std::string& k, const json& x) {
                                          if (k == "horizon") c.exec.horizon = x.get<std::size_t>();
                                          if (k == "eta_dual") c.exec.eta_dual = x.get<double>();
                                          if (k == "dual_signal") c.exec.dual_signal = parse_dual_signal(x.get<std::string>());
                                      });
                     } else if (key == "requirements") {
                         if (!v.is_array()) throw std::invalid_argument("config: 'requirements' must be an array");
                         c.requirements.clear();
                         for (const auto& item : v) {
                             RequirementSetting r;
                             read_section(item, "requirements[]", {"delta", "resilience"},
                                          [&](const std::string& k, const json& x) {
                                              if (k == "delta") r.delta = x.get<double>();
                                              if (k == "resilience") r.resilience = x.get<double>();
                                          });
                             c.requirements.push_back(r);
                         }
                     } else if (key == "baseline") {
                         read_section(v, key, {"seed", "persistence_exponent"}, [&](const std::string& k, const json& x) {
                             if (k == "seed") c.baseline_seed = x.get<std::uint64_t>();
                             if (k == "persistence_exponent") c.persistence_exponent = x.get<double>();
                         });
                     } else if (key == "held_out_eval") {
                         c.held_out_eval = v.get<bool>();
                     } else if (key == "held_out_graphs") {
                         c.held_out_graphs = v.get<std::size_t>();
                     } else if (key == "write_traces") {
                         c.write_traces = v.get<bool>();
                     } else if (key == "data_dir") {
                         c.data_dir = v.get<std::string>();
                     } else if (key == "out_dir") {
                         c.out_dir = v.get<std::string>();
                     }
                 });
    return c;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string graph_id(const char* split, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03zu", split, index);
    return buf;
}

std::string delta_tag(double delta) { return format_number(delta); }

json entry_json(const GraphEntry& e) {
    return {{"id", e.id},
            {"n_nodes", e.n_nodes},
            {"n_links", e.n_links},
            {"mean_comm_degree", e.mean_comm_degree},
            {"mean_conflict_degree", e.mean_conflict_degree},
            {"greedy_mis", e.greedy_mis},
            {"seed", e.seed},
            {"comm_file", e.id + ".comm.json"},
            {"conflict_file", e.id + ".conflict.json"}};
}

GraphEntry entry_from_json(const json& j) {
    GraphEntry e;
    e.id = j.at("id").get<std::string>();
    e.n_nodes = j.at("n_nodes").get<std::size_t>();
    e.n_links = j.at("n_links").get<std::size_t>();
    e.mean_comm_degree = j.at("mean_comm_degree").get<double>();
    e.mean_conflict_degree = j.at("mean_conflict_degree").get<double>();
    e.greedy_mis = j.at("greedy_mis").get<std::size_t>();
    e.seed = j.at("seed").get<std::uint64_t>();
    return e;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population standard deviation; zero for a single sample.
double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

std::vector<MetricsRecord> aggregate_rows(const std::vector<MetricsRecord>& records,
                                          const std::vector<RequirementSetting>& settings) {
    std::vector<MetricsRecord> out;
    for (const auto& s : settings) {
        MetricsRecord agg;
        agg.graph_id = kAggregateId;
        agg.delta = s.delta;
        std::size_t n = 0;
        for (const auto& r : records) {
            if (r.delta != s.delta) continue;
            agg.objective_fraction += r.objective_fraction;
            agg.mean_violation += r.mean_violation;
            agg.total_transmissions += r.total_transmissions;
            agg.successful_transmissions += r.successful_transmissions;
            ++n;
        }
        if (n > 0) {
            const double dn = static_cast<double>(n);
            agg.objective_fraction /= dn;
            agg.mean_violation /= dn;
            agg.total_transmissions /= dn;
            agg.successful_transmissions /= dn;
        }
        out.push_back(std::move(agg));
    }
    return out;
}

void write_metrics(const fs::path& path, const std::vector<MetricsRecord>& records,
                   const std::vector<RequirementSetting>& settings) {
    CsvTable table = metrics_table(records);
    const CsvTable agg = metrics_table(aggregate_rows(records, settings));
    table.rows.insert(table.rows.end(), agg.rows.begin(), agg.rows.end());
    write_csv(path, table);
}

std::vector<fs::path> find_files(const fs::path& root, const std::string& name_prefix, const std::string& name_suffix) {
    std::vector<fs::path> out;
    if (!fs::is_directory(root)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() >= name_prefix.size() + name_suffix.size() && name.rfind(name_prefix, 0) == 0 &&
            name.compare(name.size() - name_suffix.size(), name_suffix.size(), name_suffix) == 0)
            out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string run_label(const fs::path& root, const fs::path& file) {
    const std::string rel = fs::relative(file.parent_path(), root).generic_string();
    return rel.empty() ? "." : rel;
}

json metrics_json(const MetricsRecord& r) {
    json viol = json::array();
    for (const auto& v : r.violations) viol.push_back({{"link", v.link}, {"level", v.level}});
    return {{"graph_id", r.graph_id},
            {"delta", r.delta},
            {"n_links", r.n_links},
            {"horizon", r.horizon},
            {"avg_success", r.avg_success},
            {"avg_success_fraction", r.avg_success_fraction},
            {"objective_fraction", r.objective_fraction},
            {"total_tx", r.total_transmissions},
            {"successful_tx", r.successful_transmissions},
            {"mean_violation", r.mean_violation},
            {"violations", viol}};
}

}  // namespace

void set_log_stream(std::ostream* out) { g_log = out; }

void RunConfig::validate() const {
    if (dataset.train_count < 1 || dataset.test_count < 1)
        throw std::invalid_argument("config: dataset counts must be >= 1");
    if (dataset.n_min < 1 || dataset.n_min > dataset.n_max)
        throw std::invalid_argument("config: dataset needs 1 <= n_min <= n_max");
    if (!(dataset.radius_factor > 0.0)) throw std::invalid_argument("config: radius_factor must be positive");
    arch.validate();
    train.validate();
    if (requirements.empty()) throw std::invalid_argument("config: requirements list is empty");
    for (const auto& r : requirements) {
        if (!(r.delta >= 0.0 && r.delta <= 1.0))
            throw std::invalid_argument("config: requirement delta " + format_number(r.delta) + " outside [0, 1]");
        ExecConfig e = exec;
        e.resilience = r.resilience;
        e.validate(Requirements::uniform(1, r.delta));
    }
    if (!(persistence_exponent >= 0.0)) throw std::invalid_argument("config: persistence_exponent must be >= 0");
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    try {
        return from_json(j);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::string run_config_json(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

void save_run_config(const fs::path& path, const RunConfig& cfg) { write_text(path, run_config_json(cfg)); }

// ---------------------------------------------------------------- CSV

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

double parse_number(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("csv: not a number: '" + s + "'");
    return v;
}

void write_csv(const fs::path& path, const CsvTable& table) {
    std::string text;
    auto append_row = [&](const std::vector<std::string>& row) {
        if (row.size() != table.header.size())
            throw std::logic_error("csv: row width " + std::to_string(row.size()) + " != header width " +
                                   std::to_string(table.header.size()) + " for " + path.string());
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i].find_first_of(",\"\n\r") != std::string::npos)
                throw std::logic_error("csv: field needs quoting: '" + row[i] + "'");
            if (i) text += ',';
            text += row[i];
        }
        text += '\n';
    };
    append_row(table.header);
    for (const auto& row : table.rows) append_row(row);
    write_text(path, text);
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (line_no == 1) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(table.header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
    }
    if (line_no == 0) throw std::runtime_error(path.string() + ": empty file, no header");
    return table;
}

CsvTable training_table(const TrainLog& log, const std::vector<RequirementSetting>& settings) {
    CsvTable t;
    t.header = {"epoch", "mean_lagrangian"};
    for (const auto& s : settings) t.header.push_back("mean_violation@" + delta_tag(s.delta));
    for (const auto& s : settings) t.header.push_back("objective_fraction@" + delta_tag(s.delta));
    for (const auto& e : log.epochs) {
        std::vector<std::string> row{std::to_string(e.epoch), format_number(e.mean_lagrangian)};
        std::vector<std::string> viol(settings.size()), obj(settings.size());
        for (std::size_t i = 0; i < settings.size(); ++i) {
            for (const auto& h : e.held_out) {
                if (h.delta != settings[i].delta) continue;
                viol[i] = format_number(h.mean_violation);
                obj[i] = format_number(h.objective_fraction);
            }
        }
        row.insert(row.end(), viol.begin(), viol.end());
        row.insert(row.end(), obj.begin(), obj.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable metrics_table(const std::vector<MetricsRecord>& records) {
    CsvTable t;
    t.header = {"graph_id", "delta", "objective_fraction", "mean_violation", "total_tx", "successful_tx"};
    for (const auto& r : records)
        t.rows.push_back({r.graph_id, format_number(r.delta), format_number(r.objective_fraction),
                          format_number(r.mean_violation), format_number(r.total_transmissions),
                          format_number(r.successful_transmissions)});
    return t;
}

CsvTable violations_table(const std::vector<MetricsRecord>& records) {
    CsvTable t;
    t.header = {"graph_id", "delta", "link_id", "violation_level"};
    for (const auto& r : records)
        for (const auto& v : r.violations)
            t.rows.push_back({r.graph_id, format_number(r.delta), std::to_string(v.link), format_number(v.level)});
    return t;
}

CsvTable schedules_table(const ConflictGraph& graph, const std::vector<Schedule>& schedules) {
    CsvTable t;
    t.header = {"t", "link", "scheduled", "successful"};
    for (std::size_t step = 0; step < schedules.size(); ++step) {
        const auto ok = successful_transmissions(graph, schedules[step]);
        for (std::size_t i = 0; i < schedules[step].size(); ++i)
            t.rows.push_back({std::to_string(step), std::to_string(i), format_number(schedules[step][i]),
                              format_number(ok[i])});
    }
    return t;
}

CsvTable lambda_table(const std::vector<std::vector<double>>& trajectory) {
    CsvTable t;
    t.header = {"t", "link", "value"};
    for (std::size_t step = 0; step < trajectory.size(); ++step)
        for (std::size_t i = 0; i < trajectory[step].size(); ++i)
            t.rows.push_back({std::to_string(step), std::to_string(i), format_number(trajectory[step][i])});
    return t;
}

std::vector<double> running_average(const std::vector<double>& values, std::size_t window) {
    if (window < 1) throw std::invalid_argument("running_average: window must be >= 1");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
        double s = 0.0;
        for (std::size_t j = lo; j <= i; ++j) s += values[j];
        out[i] = s / static_cast<double>(i - lo + 1);
    }
    return out;
}

// ---------------------------------------------------------------- commands

Manifest cmd_gen_data(const DatasetSpec& spec, const fs::path& out_dir) {
    if (spec.train_count < 1 || spec.test_count < 1) throw std::invalid_argument("gen-data: counts must be >= 1");
    if (spec.n_min < 1 || spec.n_min > spec.n_max) throw std::invalid_argument("gen-data: need 1 <= n_min <= n_max");

    Manifest manifest;
    manifest.spec = spec;
    Rng rng = make_rng(spec.seed, kDatasetStream);
    std::uniform_int_distribution<std::size_t> pick_n(spec.n_min, spec.n_max);

    auto make_split = [&](const char* split, std::size_t count, std::vector<GraphEntry>& entries) {
        const fs::path dir = out_dir / split;
        ensure_dir(dir);
        for (std::size_t g = 0; g < count; ++g) {
            GraphEntry e;
            e.id = graph_id(split, g);
            e.n_nodes = pick_n(rng);
            e.seed = rng();
            const CommGraph comm = generate_comm_graph(e.n_nodes, spec.radius_factor, e.seed);
            ConflictGraph conflict;
            try {
                conflict = line_graph(comm);
            } catch (const GraphError& err) {
                throw GraphError("gen-data: graph " + e.id + " (N=" + std::to_string(e.n_nodes) + "): " + err.what());
            }
            e.n_links = conflict.n_links();
            e.mean_comm_degree = 2.0 * static_cast<double>(comm.edges.size()) / static_cast<double>(comm.n_nodes);
            e.mean_conflict_degree = graph_stats(conflict).mean_degree;
            e.greedy_mis = greedy_mis(conflict).size();
            save_graph(dir / (e.id + ".comm.json"), comm);
            save_graph(dir / (e.id + ".conflict.json"), conflict);
            entries.push_back(std::move(e));
        }
    };
    make_split("train", spec.train_count, manifest.train);
    make_split("test", spec.test_count, manifest.test);

    json j;
    j["spec"] = {{"train_count", spec.train_count}, {"test_count", spec.test_count}, {"n_min", spec.n_min},
                 {"n_max", spec.n_max},             {"radius_factor", spec.radius_factor}, {"seed", spec.seed}};
    j["train"] = json::array();
    j["test"] = json::array();
    for (const auto& e : manifest.train) j["train"].push_back(entry_json(e));
    for (const auto& e : manifest.test) j["test"].push_back(entry_json(e));
    double k = 0.0, dc = 0.0, dl = 0.0, mis = 0.0;
    const auto all = manifest.train.size() + manifest.test.size();
    for (const auto* list : {&manifest.train, &manifest.test})
        for (const auto& e : *list) {
            k += static_cast<double>(e.n_links);
            dc += e.mean_comm_degree;
            dl += e.mean_conflict_degree;
            mis += static_cast<double>(e.greedy_mis) / static_cast<double>(e.n_links);
        }
    const double n = static_cast<double>(all);
    j["summary"] = {{"graphs", all},
                    {"mean_links", k / n},
                    {"mean_comm_degree", dc / n},
                    {"mean_conflict_degree", dl / n},
                    {"mean_greedy_mis_fraction", mis / n}};
    write_text(out_dir / "manifest.json", j.dump(2) + "\n");
    log_line("gen-data: wrote " + std::to_string(all) + " graphs to " + out_dir.string());
    return manifest;
}

Dataset load_dataset(const fs::path& data_dir) {
    const fs::path manifest_path = data_dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("missing dataset manifest " + manifest_path.string() + " (run gen-data first)");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(manifest_path.string() + ": " + e.what());
    }
    Dataset ds;
    const auto& s = j.at("spec");
    ds.manifest.spec.train_count = s.at("train_count").get<std::size_t>();
    ds.manifest.spec.test_count = s.at("test_count").get<std::size_t>();
    ds.manifest.spec.n_min = s.at("n_min").get<std::size_t>();
    ds.manifest.spec.n_max = s.at("n_max").get<std::size_t>();
    ds.manifest.spec.radius_factor = s.at("radius_factor").get<double>();
    ds.manifest.spec.seed = s.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("train")) {
        ds.manifest.train.push_back(entry_from_json(e));
        ds.train.push_back(load_conflict_graph(data_dir / "train" / e.at("conflict_file").get<std::string>()));
    }
    for (const auto& e : j.at("test")) {
        ds.manifest.test.push_back(entry_from_json(e));
        ds.test.push_back(load_conflict_graph(data_dir / "test" / e.at("conflict_file").get<std::string>()));
    }
    return ds;
}

TrainResult cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const Dataset ds = load_dataset(cfg.data_dir);
    ensure_dir(cfg.out_dir / "checkpoints");
    save_run_config(cfg.out_dir / "config.json", cfg);

    EvalBundle bundle;
    if (cfg.held_out_eval) {
        const std::size_t n = cfg.held_out_graphs == 0 ? ds.test.size() : std::min(cfg.held_out_graphs, ds.test.size());
        for (std::size_t g = 0; g < n; ++g) {
            bundle.graphs.push_back(ds.test[g]);
            bundle.graph_ids.push_back(ds.manifest.test[g].id);
        }
        bundle.settings = cfg.requirements;
        bundle.exec = cfg.exec;
    }

    auto checkpoint = [&](std::size_t epoch) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%04zu.params", epoch);
        return cfg.out_dir / "checkpoints" / name;
    };
    save_params(checkpoint(0), init_params(cfg.arch, cfg.train.seed));

    TrainLog partial;
    auto on_epoch = [&](const EpochRecord& record, const PolicyParameters& params) {
        partial.epochs.push_back(record);
        write_csv(cfg.out_dir / "train_log.csv", training_table(partial, cfg.requirements));
        if (is_eval_epoch(record.epoch, cfg.train)) save_params(checkpoint(record.epoch), params);
        std::ostringstream msg;
        msg << "epoch " << record.epoch << "/" << cfg.train.epochs << " L=" << record.mean_lagrangian;
        for (const auto& h : record.held_out)
            msg << " | delta=" << h.delta << " viol=" << h.mean_violation << " obj=" << h.objective_fraction;
        log_line(msg.str());
    };
    TrainResult result = train(ds.train, cfg.train, cfg.arch, cfg.held_out_eval ? &bundle : nullptr, on_epoch);
    write_csv(cfg.out_dir / "train_log.csv", training_table(result.log, cfg.requirements));
    save_params(cfg.out_dir / "policy.params", result.params);
    return result;
}

EvalOutput cmd_eval(const RunConfig& cfg, const fs::path& checkpoint) {
    cfg.validate();
    const PolicyParameters params = load_params(checkpoint, cfg.arch);
    const Dataset ds = load_dataset(cfg.data_dir);

    const std::size_t n_req = cfg.requirements.size();
    const std::size_t n_items = ds.test.size() * n_req;
    std::vector<ExecTrace> traces(n_items);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t item = 0; item < n_items; ++item) {
        const std::size_t g = item / n_req;
        const auto& setting = cfg.requirements[item % n_req];
        ExecConfig exec = cfg.exec;
        exec.resilience = setting.resilience;
        traces[item] = execute(ds.test[g], params, Requirements::uniform(ds.test[g].n_links(), setting.delta), exec,
                               ds.manifest.test[g].id);
    }

    EvalOutput out;
    for (const auto& t : traces) out.records.push_back(t.metrics);
    write_metrics(cfg.out_dir / "eval_metrics.csv", out.records, cfg.requirements);
    write_csv(cfg.out_dir / "violations.csv", violations_table(out.records));
    if (cfg.write_traces) {
        for (std::size_t item = 0; item < n_items; ++item) {
            const std::size_t g = item / n_req;
            const std::string stem = ds.manifest.test[g].id + "_d" + delta_tag(cfg.requirements[item % n_req].delta);
            write_csv(cfg.out_dir / "traces" / (stem + "_schedules.csv"), schedules_table(ds.test[g], traces[item].schedules));
            write_csv(cfg.out_dir / "traces" / (stem + "_lambda.csv"), lambda_table(traces[item].lambda_trajectory));
            write_text(cfg.out_dir / "traces" / (stem + "_metrics.json"), metrics_json(traces[item].metrics).dump(2) + "\n");
        }
    }
    log_line("eval: " + std::to_string(out.records.size()) + " records written to " + cfg.out_dir.string());
    return out;
}

std::map<std::string, std::vector<MetricsRecord>> cmd_baseline(const RunConfig& cfg, const std::string& kind,
                                                                const std::string& variant) {
    cfg.validate();
    std::vector<BaselineKind> kinds;
    if (kind == "all")
        kinds = {BaselineKind::PPersistent, BaselineKind::MisRandom};
    else
        kinds = {parse_baseline_kind(kind)};
    std::vector<bool> variants;
    if (variant == "all")
        variants = {false, true};
    else if (variant == "naive")
        variants = {false};
    else if (variant == "ca")
        variants = {true};
    else
        throw std::invalid_argument("unknown baseline variant '" + variant + "' (expected all|naive|ca)");

    const Dataset ds = load_dataset(cfg.data_dir);
    std::map<std::string, std::vector<MetricsRecord>> out;
    for (BaselineKind k : kinds) {
        for (bool ca : variants) {
            BaselineConfig base;
            base.kind = k;
            base.collision_avoidance = ca;
            base.horizon = cfg.exec.horizon;
            base.persistence_exponent = cfg.persistence_exponent;
            const std::string label = baseline_label(base);

            std::vector<std::vector<MetricsRecord>> per_graph(ds.test.size());
#pragma omp parallel for schedule(dynamic)
            for (std::size_t g = 0; g < ds.test.size(); ++g) {
                BaselineConfig bc = base;
                // Naive and CA variants share the per-graph seed, so CA post-processes the same draws.
                bc.seed = make_rng(cfg.baseline_seed, kBaselineStreamBase + g)();
                const auto schedules = run_baseline(ds.test[g], bc);
                for (const auto& s : cfg.requirements)
                    per_graph[g].push_back(compute_metrics(ds.test[g], schedules,
                                                           Requirements::uniform(ds.test[g].n_links(), s.delta),
                                                           ds.manifest.test[g].id, s.delta));
            }
            auto& records = out[label];
            for (auto& v : per_graph)
                for (auto& r : v) records.push_back(std::move(r));
            write_metrics(cfg.out_dir / ("baseline_" + label + "_metrics.csv"), records, cfg.requirements);
            log_line("baseline: " + label + " done");
        }
    }
    return out;
}

std::vector<fs::path> cmd_report(const fs::path& metrics_dir, const fs::path& out_dir, std::size_t window) {
    if (!fs::is_directory(metrics_dir)) throw std::runtime_error("report: metrics directory " + metrics_dir.string() + " does not exist");
    const auto logs = find_files(metrics_dir, "train_log", ".csv");
    const auto evals = find_files(metrics_dir, "eval_metrics", ".csv");
    const auto viols = find_files(metrics_dir, "violations", ".csv");
    const auto baselines = find_files(metrics_dir, "baseline_", "_metrics.csv");
    if (logs.empty()) throw std::runtime_error("report: no train_log.csv under " + metrics_dir.string());
    if (evals.empty()) throw std::runtime_error("report: no eval_metrics.csv under " + metrics_dir.string());
    if (viols.empty()) throw std::runtime_error("report: no violations.csv under " + metrics_dir.string());

    // Smoothed training curves per quantity, delta and run: epoch -> value.
    using Curve = std::map<std::size_t, double>;
    auto curves = [&](const std::string& quantity) {
        std::map<std::string, std::vector<Curve>> by_delta;  // keyed by delta text
        for (const auto& path : logs) {
            const CsvTable t = read_csv(path);
            const std::size_t epoch_col = t.column("epoch");
            const std::string prefix = quantity + "@";
            for (std::size_t c = 0; c < t.header.size(); ++c) {
                if (t.header[c].rfind(prefix, 0) != 0) continue;
                std::vector<std::size_t> epochs;
                std::vector<double> values;
                for (const auto& row : t.rows) {
                    if (row[c].empty()) continue;
                    epochs.push_back(static_cast<std::size_t>(std::stoul(row[epoch_col])));
                    values.push_back(parse_number(row[c]));
                }
                const auto smooth = running_average(values, window);
                Curve curve;
                for (std::size_t i = 0; i < epochs.size(); ++i) curve[epochs[i]] = smooth[i];
                by_delta[t.header[c].substr(prefix.size())].push_back(std::move(curve));
            }
        }
        return by_delta;
    };
    auto curve_rows = [&](const std::string& series, const std::map<std::string, std::vector<Curve>>& by_delta,
                          CsvTable& table, bool with_series) {
        for (const auto& [delta, runs] : by_delta) {
            std::set<std::size_t> epochs;
            for (const auto& c : runs)
                for (const auto& [e, v] : c) epochs.insert(e);
            for (std::size_t e : epochs) {
                std::vector<double> vals;
                for (const auto& c : runs)
                    if (auto it = c.find(e); it != c.end()) vals.push_back(it->second);
                std::vector<std::string> row;
                if (with_series) row.push_back(series);
                row.insert(row.end(), {delta, std::to_string(e), format_number(mean_of(vals)),
                                       format_number(std_of(vals)), std::to_string(vals.size())});
                table.rows.push_back(std::move(row));
            }
        }
    };

    std::vector<fs::path> written;

    CsvTable fig2;
    fig2.header = {"delta", "epoch", "mean", "std", "runs"};
    curve_rows("", curves("mean_violation"), fig2, false);
    written.push_back(out_dir / "violation_vs_epoch.csv");
    write_csv(written.back(), fig2);

    CsvTable fig3;
    fig3.header = {"series", "delta", "epoch", "mean", "std", "runs"};
    const auto obj = curves("objective_fraction");
    curve_rows("sagnn", obj, fig3, true);
    std::map<std::string, std::map<std::string, std::vector<double>>> horizontals;  // label -> delta -> per-run value
    for (const auto& path : baselines) {
        const std::string name = path.filename().string();
        const std::string label = name.substr(9, name.size() - 9 - 12);
        const CsvTable t = read_csv(path);
        const std::size_t id = t.column("graph_id"), d = t.column("delta"), o = t.column("objective_fraction");
        for (const auto& row : t.rows)
            if (row[id] == kAggregateId) horizontals[label][row[d]].push_back(parse_number(row[o]));
    }
    for (const auto& [label, per_delta] : horizontals) {
        for (const auto& [delta, vals] : per_delta) {
            std::set<std::size_t> epochs;
            if (auto it = obj.find(delta); it != obj.end())
                for (const auto& c : it->second)
                    for (const auto& [e, v] : c) epochs.insert(e);
            for (std::size_t e : epochs)
                fig3.rows.push_back({label, delta, std::to_string(e), format_number(mean_of(vals)),
                                     format_number(std_of(vals)), std::to_string(vals.size())});
        }
    }
    written.push_back(out_dir / "objective_vs_epoch.csv");
    write_csv(written.back(), fig3);

    CsvTable fig4;
    fig4.header = {"delta",  "graphs", "total_tx_mean", "total_tx_std", "successful_tx_mean", "successful_tx_std",
                   "success_ratio"};
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> tx;
    for (const auto& path : evals) {
        const CsvTable t = read_csv(path);
        const std::size_t id = t.column("graph_id"), d = t.column("delta"), tot = t.column("total_tx"),
                          ok = t.column("successful_tx");
        for (const auto& row : t.rows) {
            if (row[id] == kAggregateId) continue;
            tx[row[d]].first.push_back(parse_number(row[tot]));
            tx[row[d]].second.push_back(parse_number(row[ok]));
        }
    }
    for (const auto& [delta, v] : tx) {
        double sum_tot = 0.0, sum_ok = 0.0;
        for (double x : v.first) sum_tot += x;
        for (double x : v.second) sum_ok += x;
        fig4.rows.push_back({delta, std::to_string(v.first.size()), format_number(mean_of(v.first)),
                             format_number(std_of(v.first)), format_number(mean_of(v.second)),
                             format_number(std_of(v.second)), format_number(sum_tot > 0.0 ? sum_ok / sum_tot : 0.0)});
    }
    written.push_back(out_dir / "transmissions.csv");
    write_csv(written.back(), fig4);

    CsvTable fig5;
    fig5.header = {"delta", "run", "graph_id", "link_id", "violation_level"};
    for (const auto& path : viols) {
        const CsvTable t = read_csv(path);
        const std::size_t id = t.column("graph_id"), d = t.column("delta"), l = t.column("link_id"),
                          v = t.column("violation_level");
        const std::string run = run_label(metrics_dir, path);
        for (const auto& row : t.rows) fig5.rows.push_back({row[d], run, row[id], row[l], row[v]});
    }
    std::stable_sort(fig5.rows.begin(), fig5.rows.end(), [](const auto& a, const auto& b) {
        return parse_number(a[0]) < parse_number(b[0]);
    });
    written.push_back(out_dir / "violation_levels.csv");
    write_csv(written.back(), fig5);

    log_line("report: wrote " + std::to_string(written.size()) + " files to " + out_dir.string());
    return written;
}

}  // namespace sagnn::harness
