#include "changediag/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cdiag {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

namespace {

template <typename T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad value for '") + key + "': " + e.what());
    }
}

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed JSON: ") + e.what());
    }
}

json problem_json(const ProblemSpec& s) {
    return json{{"alphabet_size", s.alphabet_size}, {"num_types", s.num_types}, {"p0", s.p0},
                {"p", s.p}, {"nu", s.nu}, {"densities", s.densities},
                {"delay_cost", s.delay_cost}, {"terminal_costs", s.terminal_costs}};
}

ProblemSpec problem_from(const json& j) {
    if (!j.is_object()) throw FormatError("problem spec must be a JSON object");
    ProblemSpec s;
    s.alphabet_size = required<std::size_t>(j, "alphabet_size");
    s.num_types = required<std::size_t>(j, "num_types");
    s.p0 = required<double>(j, "p0");
    s.p = required<double>(j, "p");
    s.nu = required<std::vector<double>>(j, "nu");
    s.densities = required<std::vector<std::vector<double>>>(j, "densities");
    s.delay_cost = required<double>(j, "delay_cost");
    s.terminal_costs = required<std::vector<std::vector<double>>>(j, "terminal_costs");
    return s;
}

// Little-endian byte buffer helpers.
struct Writer {
    std::string buf;
    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        buf.append(reinterpret_cast<const char*>(raw), sizeof(T));
    }
    void bytes(const std::string& s) { buf += s; }
};

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    template <typename T>
    T get() {
        if (pos + sizeof(T) > buf.size()) throw FormatError("value table truncated");
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, buf.data() + pos, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos += sizeof(T);
        T v;
        std::memcpy(&v, raw, sizeof(T));
        return v;
    }
    std::string bytes(std::size_t n) {
        if (pos + n > buf.size()) throw FormatError("value table truncated");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

constexpr char kMagic[8] = {'C', 'D', 'V', 'T', 'A', 'B', 'L', 'E'};
constexpr std::uint32_t kTableVersion = 1;

}  // namespace

ProblemSpec problem_from_json(const std::string& text) {
    auto s = problem_from(parse(text));
    validate(s);
    return s;
}

std::string problem_to_json(const ProblemSpec& spec) { return problem_json(spec).dump(2); }

ProblemSpec load_problem(const std::filesystem::path& path) { return problem_from_json(read_text(path)); }

SuspendedAnimationInput suspended_animation_from_json(const std::string& text) {
    const json j = parse(text);
    SuspendedAnimationInput in;
    in.sa.component_failure_probs = required<std::vector<double>>(j, "component_failure_probs");
    const std::size_t K = in.sa.component_failure_probs.size();
    if (K == 0 || K > 20) throw FormatError("component_failure_probs must have 1..20 entries");
    if (!j.contains("phi")) throw FormatError("missing key 'phi'");
    const json& phi = j.at("phi");
    if (phi.is_string()) {
        const auto name = phi.get<std::string>();
        if (name == "min_index") in.sa.phi = phi_min_index(K);
        else if (name == "cardinality") in.sa.phi = phi_cardinality(K);
        else if (name == "binary") in.sa.phi = phi_binary(K);
        else throw FormatError("unknown phi variant '" + name + "'");
    } else if (phi.is_array()) {
        for (const auto& e : phi) {
            PhiEntry pe;
            for (int k : required<std::vector<int>>(e, "subset")) {
                if (k < 1 || static_cast<std::size_t>(k) > K) throw FormatError("phi subset names an unknown component");
                pe.subset |= ComponentSet{1} << (k - 1);
            }
            pe.label = required<int>(e, "label");
            in.sa.phi.push_back(pe);
        }
    } else {
        throw FormatError("phi must be an array or a variant name");
    }
    in.sa.label_densities = required<std::vector<std::vector<double>>>(j, "label_densities");
    in.delay_cost = j.value("delay_cost", 1.0);
    if (j.contains("terminal_costs")) {
        in.terminal_costs = required<std::vector<std::vector<double>>>(j, "terminal_costs");
    } else {
        // Default: unit false alarms, unit false isolations.
        const std::size_t M = static_cast<std::size_t>(std::max(0, in.sa.max_label()));
        in.terminal_costs.assign(M + 1, std::vector<double>(M, 1.0));
        for (std::size_t i = 1; i <= M; ++i) in.terminal_costs[i][i - 1] = 0.0;
    }
    return in;
}

std::string table_to_bytes(const ProblemSpec& spec, const ValueTable& table) {
    const SimplexGrid& grid = *table.grid;
    Writer w;
    w.buf.append(kMagic, sizeof(kMagic));
    w.put<std::uint32_t>(kTableVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.M()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.resolution()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.alphabet_size));
    w.put<std::uint64_t>(table.iterations);
    w.put<double>(table.tol);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(table.criterion));
    w.put<std::uint8_t>(table.converged ? 1 : 0);
    const bool has_labels = table.labels.size() == grid.size();
    w.put<std::uint8_t>(has_labels ? 1 : 0);
    w.put<std::uint8_t>(0);
    w.put<double>(table.sup_change);
    w.put<double>(table.error_bound);
    w.put<double>(table.max_increase);
    const std::string model = problem_json(spec).dump();
    w.put<std::uint64_t>(model.size());
    w.bytes(model);
    w.put<std::uint64_t>(grid.size());
    for (double v : table.values) w.put<double>(v);
    if (has_labels) w.buf.append(reinterpret_cast<const char*>(table.labels.data()), table.labels.size());
    return std::move(w.buf);
}

StoredTable table_from_bytes(const std::string& bytes) {
    Reader r{bytes};
    if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw FormatError("not a value table file");
    if (r.get<std::uint32_t>() != kTableVersion) throw FormatError("unsupported value table version");
    StoredTable out;
    const auto M = r.get<std::uint32_t>();
    const auto Q = r.get<std::uint32_t>();
    const auto E = r.get<std::uint32_t>();
    auto& t = out.table;
    t.iterations = r.get<std::uint64_t>();
    t.tol = r.get<double>();
    const auto crit = r.get<std::uint8_t>();
    if (crit > 3) throw FormatError("bad stopping criterion code");
    t.criterion = static_cast<StopCriterion>(crit);
    t.converged = r.get<std::uint8_t>() != 0;
    const bool has_labels = r.get<std::uint8_t>() != 0;
    r.get<std::uint8_t>();
    t.sup_change = r.get<double>();
    t.error_bound = r.get<double>();
    t.max_increase = r.get<double>();
    const auto model_len = r.get<std::uint64_t>();
    out.spec = problem_from_json(r.bytes(model_len));
    if (out.spec.M() != M || out.spec.alphabet_size != E) throw FormatError("table header disagrees with its model");
    t.grid = std::make_shared<SimplexGrid>(M, Q);
    const auto n = r.get<std::uint64_t>();
    if (n != t.grid->size()) throw FormatError("node count disagrees with grid size");
    t.values.resize(n);
    for (auto& v : t.values) v = r.get<double>();
    if (has_labels) {
        const std::string lab = r.bytes(n);
        t.labels.assign(lab.begin(), lab.end());
    }
    if (r.pos != bytes.size()) throw FormatError("trailing bytes after value table");
    return out;
}

void save_table(const std::filesystem::path& path, const ProblemSpec& spec, const ValueTable& table) {
    write_text(path, table_to_bytes(spec, table));
}

StoredTable load_table(const std::filesystem::path& path) { return table_from_bytes(read_text(path)); }

std::string table_sidecar_json(const ProblemSpec& spec, const ValueTable& table) {
    json j{{"format", "CDVTABLE"},
           {"version", kTableVersion},
           {"M", table.grid->M()},
           {"Q", table.grid->resolution()},
           {"alphabet_size", spec.alphabet_size},
           {"N", table.iterations},
           {"tol", table.tol},
           {"criterion", std::string(to_string(table.criterion))},
           {"converged", table.converged},
           {"sup_change", table.sup_change},
           {"error_bound", table.error_bound},
           {"max_increase", table.max_increase},
           {"node_count", table.grid->size()},
           {"has_labels", table.labels.size() == table.grid->size()},
           {"model", problem_json(spec)}};
    return j.dump(2);
}

std::string boundary_to_json(const SplineBoundary& b) {
    json j{{"corner", b.corner()},
           {"knots", b.knots()},
           {"coefficients", b.coefficients()},
           {"lambda", b.lambda()},
           {"rms", b.rms()},
           {"cv_score", b.cv_score()},
           {"basis", "clamped cubic B-spline, linear extrapolation"},
           {"angle", "beta_i = asin(pi_{(i+2) mod 3} / r_i)"}};
    return j.dump(2);
}

SplineBoundary boundary_from_json(const std::string& text) {
    const json j = parse(text);
    try {
        return SplineBoundary(required<std::size_t>(j, "corner"), required<std::vector<double>>(j, "knots"),
                              required<std::vector<double>>(j, "coefficients"), required<double>(j, "lambda"),
                              required<double>(j, "rms"), j.value("cv_score", 0.0));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad spline boundary: ") + e.what());
    }
}

std::string risk_to_json(const RiskEstimate& r) {
    json j{{"runs", r.runs},
           {"seed", r.seed},
           {"mean", r.mean},
           {"std_error", r.std_error},
           {"breakdown", {{"delay", r.delay}, {"false_alarm", r.false_alarm}, {"false_isolation", r.false_isolation}}},
           {"cap_rate", r.cap_rate},
           {"mean_tau", r.mean_tau},
           {"posterior_form_mean", r.posterior_mean},
           {"paired_difference", {{"mean", r.paired_diff_mean}, {"std_error", r.paired_diff_stderr}}}};
    return j.dump(2);
}

std::string posterior_to_json(const Posterior& pi) { return json(pi.pi).dump(); }

}  // namespace cdiag
