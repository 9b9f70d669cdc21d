#include "psf/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "psf/errors.hpp"

namespace psf {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void spill(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Line bookkeeping. nlohmann does not expose positions for values, so a
// second SAX pass over a newline-counting iterator records where every field
// starts, keyed by dotted path ("scenario.box_size[1]").

struct CountingIterator {
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  int* line = nullptr;

  reference operator*() const { return *p; }
  CountingIterator& operator++() {
    if (*p == '\n') ++*line;
    ++p;
    return *this;
  }
  CountingIterator operator++(int) {
    CountingIterator old = *this;
    ++*this;
    return old;
  }
  bool operator==(const CountingIterator& o) const { return p == o.p; }
  bool operator!=(const CountingIterator& o) const { return p != o.p; }
};

class LineRecorder : public nlohmann::json_sax<json> {
 public:
  explicit LineRecorder(const int* line) : line_(line) {}
  std::map<std::string, int> lines;

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override {
    value();
    stack_.push_back({false, 0, current_});
    return true;
  }
  bool key(string_t& k) override {
    const std::string& base = stack_.back().path;
    current_ = base.empty() ? k : base + "." + k;
    lines.emplace(current_, *line_);
    return true;
  }
  bool end_object() override { return pop(); }
  bool start_array(std::size_t) override {
    value();
    stack_.push_back({true, 0, current_});
    return true;
  }
  bool end_array() override { return pop(); }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

 private:
  struct Frame {
    bool array;
    int index;
    std::string path;
  };

  bool value() {
    if (!stack_.empty() && stack_.back().array) {
      Frame& f = stack_.back();
      current_ = f.path + "[" + std::to_string(f.index++) + "]";
      lines.emplace(current_, *line_);
    }
    return true;
  }
  bool pop() {
    current_ = stack_.back().path;
    stack_.pop_back();
    return true;
  }

  const int* line_;
  std::vector<Frame> stack_;
  std::string current_;
};

class Document {
 public:
  Document(const std::string& text, std::string source) : source_(std::move(source)) {
    try {
      root_ = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(source_, line_at(text, e.byte), "", "malformed JSON: " + strip_prefix(e.what()));
    }
    int line = 1;
    LineRecorder rec(&line);
    CountingIterator first{text.data(), &line};
    CountingIterator last{text.data() + text.size(), &line};
    json::sax_parse(first, last, &rec);
    lines_ = std::move(rec.lines);
  }

  const json& root() const { return root_; }

  int line_of(std::string path) const {
    // Fall back to the closest enclosing field.
    while (!path.empty()) {
      if (auto it = lines_.find(path); it != lines_.end()) return it->second;
      const auto cut = path.find_last_of(".[");
      if (cut == std::string::npos) break;
      path.resize(cut);
    }
    return 0;
  }

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    throw ConfigError(source_, line_of(path), path, message);
  }

 private:
  static int line_at(const std::string& text, std::size_t byte) {
    const std::size_t end = std::min(byte, text.size());
    int line = 1;
    for (std::size_t i = 0; i + 1 < end; ++i) line += text[i] == '\n';
    return line;
  }
  static std::string strip_prefix(const std::string& what) {
    // "[json.exception.parse_error.101] parse error at line 3, column 5: ..."
    const auto colon = what.find(": ");
    return colon == std::string::npos ? what : what.substr(colon + 2);
  }

  std::string source_;
  json root_;
  std::map<std::string, int> lines_;
};

// Typed access to one JSON object; rejects keys nobody asked about.
class Section {
 public:
  Section(const Document& doc, const json& node, std::string path) : doc_(doc), node_(node), path_(std::move(path)) {
    if (!node_.is_object()) doc_.fail(path_, "must be an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& item : node_.items()) {
      if (!used_.count(item.key())) doc_.fail(child(item.key()), "is not a recognised key");
    }
  }

  std::string child(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  bool has(const std::string& k) {
    used_.insert(k);
    return node_.contains(k);
  }

  Section section(const std::string& k) {
    used_.insert(k);
    static const json empty = json::object();
    return Section(doc_, node_.contains(k) ? node_.at(k) : empty, child(k));
  }

  // Reads a finite number into `out` when present; `ok` checks the range.
  template <class Check>
  void number(const std::string& k, double& out, Check ok, const char* rule) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_number()) doc_.fail(child(k), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d) || !ok(d)) doc_.fail(child(k), rule);
    out = d;
  }
  void number(const std::string& k, double& out) {
    number(k, out, [](double) { return true; }, "must be finite");
  }

  template <class Check>
  void integer(const std::string& k, int& out, Check ok, const char* rule) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_number_integer()) doc_.fail(child(k), "must be an integer");
    const auto i = v.get<long long>();
    if (i < -2147483647LL || i > 2147483647LL || !ok(static_cast<int>(i))) doc_.fail(child(k), rule);
    out = static_cast<int>(i);
  }

  void unsigned64(const std::string& k, std::uint64_t& out) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_number_unsigned()) doc_.fail(child(k), "must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void text(const std::string& k, std::string& out) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_string()) doc_.fail(child(k), "must be a string");
    out = v.get<std::string>();
  }

  template <class Check>
  void pair(const std::string& k, double& a, double& b, Check ok, const char* rule) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_array() || v.size() != 2) doc_.fail(child(k), "must be an array of two numbers");
    for (std::size_t i = 0; i < 2; ++i) {
      const std::string p = child(k) + "[" + std::to_string(i) + "]";
      if (!v[i].is_number()) doc_.fail(p, "must be a number");
      const double d = v[i].get<double>();
      if (!std::isfinite(d) || !ok(d)) doc_.fail(p, rule);
    }
    a = v[0].get<double>();
    b = v[1].get<double>();
  }

  const Document& doc() const { return doc_; }
  const std::string& path() const { return path_; }

 private:
  const Document& doc_;
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

const auto positive = [](double v) { return v > 0.0; };
const auto non_negative = [](double v) { return v >= 0.0; };

void read_params(Section s, WorldParams& p, bool strictly_positive) {
  if (strictly_positive) {
    s.number("mass", p.mass, positive, "must be positive");
    s.number("friction", p.friction, positive, "must be positive");
  } else {
    s.number("mass", p.mass);
    s.number("friction", p.friction);
  }
}

void read_scenario(Section s, HandoverConfig& c) {
  s.number("dt", c.dt, positive, "must be positive");
  s.integer("horizon", c.horizon, [](int v) { return v >= 1; }, "must be at least 1");
  s.pair("box_size", c.box_size.x(), c.box_size.y(), positive, "must be positive");
  s.pair("pad_size", c.pad_size.x(), c.pad_size.y(), positive, "must be positive");
  for (auto [key, field] : std::initializer_list<std::pair<const char*, double*>>{
           {"link_length", &c.link_length},       {"link_mass", &c.link_mass},
           {"pad_mass", &c.pad_mass},             {"table_friction", &c.table_friction},
           {"giving_height", &c.giving_height},   {"receiving_height", &c.receiving_height},
           {"lift_max_torque", &c.lift_max_torque}, {"lift_damping", &c.lift_damping},
           {"grip_max_force", &c.grip_max_force}, {"grip_damping", &c.grip_damping},
           {"squeeze", &c.squeeze},               {"grip_gain", &c.grip_gain},
           {"grip_max_speed", &c.grip_max_speed}, {"open_offset", &c.open_offset},
           {"lift_gain", &c.lift_gain},           {"lift_height", &c.lift_height},
           {"lower_height", &c.lower_height}}) {
    s.number(key, *field);
  }
  Section ph = s.section("phases");
  for (auto [key, field] : std::initializer_list<std::pair<const char*, double*>>{
           {"giving_close", &c.phases.giving_close},
           {"lift", &c.phases.lift},
           {"receiving_close", &c.phases.receiving_close},
           {"giving_release", &c.phases.giving_release},
           {"lower", &c.phases.lower},
           {"hold", &c.phases.hold},
           {"move_duration", &c.phases.move_duration}}) {
    ph.number(key, *field, non_negative, "must be non-negative");
  }
}

void read_distribution(Section s, DistributionSpec& d) {
  read_params(s.section("mean"), d.mean, false);
  read_params(s.section("sigma"), d.sigma, true);
  Section dom = s.section("domain");
  dom.pair("mass", d.domain.mass.lower, d.domain.mass.upper, [](double) { return true; }, "must be finite");
  dom.pair("friction", d.domain.friction.lower, d.domain.friction.upper, [](double) { return true; },
           "must be finite");
  if (!(d.domain.mass.lower < d.domain.mass.upper)) dom.doc().fail(dom.child("mass"), "needs lower < upper");
  if (!(d.domain.friction.lower < d.domain.friction.upper)) {
    dom.doc().fail(dom.child("friction"), "needs lower < upper");
  }
  if (!d.domain.contains(d.mean)) s.doc().fail(s.child("mean"), "lies outside the domain");
}

MotorAggregation parse_aggregation(const Section& s, const std::string& field, const std::string& v) {
  if (v == "max") return MotorAggregation::Max;
  if (v == "min") return MotorAggregation::Min;
  s.doc().fail(s.child(field), "must be \"max\" or \"min\"");
}

RunConfig read_root(const Document& doc) {
  RunConfig rc;
  FilterConfig& f = rc.filter;
  Section root(doc, doc.root(), "");
  int version = kConfigVersion;
  root.integer("version", version, [](int v) { return v == kConfigVersion; }, "is not a supported version");
  root.text("output_dir", rc.output_dir);
  if (root.has("output_dir") && rc.output_dir.empty()) doc.fail("output_dir", "must not be empty");
  root.unsigned64("seed", f.seed);

  read_scenario(root.section("scenario"), f.scenario);
  read_distribution(root.section("distribution"), f.distribution);
  {
    Section g = root.section("grid");
    g.integer("n", f.grid_n, [](int v) { return v >= 2; }, "must be at least 2");
  }
  {
    Section s = root.section("safety");
    s.number("epsilon", f.epsilon, [](double v) { return v > 0.0 && v <= 1.0; }, "must lie in (0, 1]");
    std::string agg;
    s.text("motor_aggregation", agg);
    if (!agg.empty()) f.sparse.aggregation = parse_aggregation(s, "motor_aggregation", agg);
  }
  {
    Section s = root.section("selection");
    s.integer("per_cause", f.selection.per_cause, [](int v) { return v >= 0; }, "must be non-negative");
    s.integer("window", f.selection.window, [](int v) { return v >= 0; }, "must be non-negative");
  }
  {
    Section p = root.section("probe");
    read_params(p.section("mean"), f.probe.mean, false);
    read_params(p.section("sigma"), f.probe.sigma, true);
    p.integer("budget", f.probe_budget, [](int v) { return v >= 0; }, "must be non-negative");
    Section t = p.section("thresholds");
    t.number("sigma_mass", f.probe_thresholds.sigma_mass, non_negative, "must be non-negative");
    t.number("sigma_friction", f.probe_thresholds.sigma_friction, non_negative, "must be non-negative");
    Section n = p.section("nominal_tolerance");
    n.number("mass", f.nominal_tolerance.mass, non_negative, "must be non-negative");
    n.number("friction", f.nominal_tolerance.friction, non_negative, "must be non-negative");
    if (!f.distribution.domain.contains(f.probe.mean)) doc.fail("probe.mean", "lies outside the domain");
  }
  {
    Section s = root.section("sparse");
    s.integer("workers", f.sparse.workers, [](int v) { return v >= 1 && v <= 1024; }, "must lie in [1, 1024]");
    s.integer("burst_steps", f.sparse.burst_steps, [](int v) { return v >= 1; }, "must be at least 1");
  }

  // Cross-field rules live with the scenario; map their field back to a line.
  try {
    validate(f.scenario);
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    const auto space = what.find(' ');
    const std::string field = what.substr(0, space);
    doc.fail(field, space == std::string::npos ? "is invalid" : what.substr(space + 1));
  }
  return rc;
}

ojson params_json(const WorldParams& p) { return {{"mass", p.mass}, {"friction", p.friction}}; }

ojson distribution_json(const DistributionSpec& d) {
  return {{"mean", params_json(d.mean)},
          {"sigma", params_json(d.sigma)},
          {"domain",
           {{"mass", {d.domain.mass.lower, d.domain.mass.upper}},
            {"friction", {d.domain.friction.lower, d.domain.friction.upper}}}}};
}

const char* to_string(MotorAggregation a) { return a == MotorAggregation::Max ? "max" : "min"; }

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& field, const std::string& message)
    : InvalidArgument(source + ":" + (line > 0 ? std::to_string(line) + ":" : std::string()) + " " +
                      (field.empty() ? "" : field + " ") + message),
      line_(line),
      field_(field) {}

RunConfig parse_config(const std::string& text, const std::string& source) {
  const Document doc(text, source);
  return read_root(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open file");
  return parse_config(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()),
                      path.string());
}

std::string dump_config(const RunConfig& rc) {
  const FilterConfig& f = rc.filter;
  const HandoverConfig& c = f.scenario;
  ojson j;
  j["version"] = kConfigVersion;
  j["output_dir"] = rc.output_dir;
  j["seed"] = f.seed;
  j["scenario"] = {{"dt", c.dt},
                   {"horizon", c.horizon},
                   {"box_size", {c.box_size.x(), c.box_size.y()}},
                   {"pad_size", {c.pad_size.x(), c.pad_size.y()}},
                   {"link_length", c.link_length},
                   {"link_mass", c.link_mass},
                   {"pad_mass", c.pad_mass},
                   {"table_friction", c.table_friction},
                   {"giving_height", c.giving_height},
                   {"receiving_height", c.receiving_height},
                   {"lift_max_torque", c.lift_max_torque},
                   {"lift_damping", c.lift_damping},
                   {"grip_max_force", c.grip_max_force},
                   {"grip_damping", c.grip_damping},
                   {"squeeze", c.squeeze},
                   {"grip_gain", c.grip_gain},
                   {"grip_max_speed", c.grip_max_speed},
                   {"open_offset", c.open_offset},
                   {"lift_gain", c.lift_gain},
                   {"lift_height", c.lift_height},
                   {"lower_height", c.lower_height},
                   {"phases",
                    {{"giving_close", c.phases.giving_close},
                     {"lift", c.phases.lift},
                     {"receiving_close", c.phases.receiving_close},
                     {"giving_release", c.phases.giving_release},
                     {"lower", c.phases.lower},
                     {"hold", c.phases.hold},
                     {"move_duration", c.phases.move_duration}}}};
  j["distribution"] = distribution_json(f.distribution);
  j["grid"] = {{"n", f.grid_n}};
  j["safety"] = {{"epsilon", f.epsilon}, {"motor_aggregation", to_string(f.sparse.aggregation)}};
  j["selection"] = {{"per_cause", f.selection.per_cause}, {"window", f.selection.window}};
  j["probe"] = {{"mean", params_json(f.probe.mean)},
                {"sigma", params_json(f.probe.sigma)},
                {"budget", f.probe_budget},
                {"thresholds",
                 {{"sigma_mass", f.probe_thresholds.sigma_mass},
                  {"sigma_friction", f.probe_thresholds.sigma_friction}}},
                {"nominal_tolerance", {{"mass", f.nominal_tolerance.mass}, {"friction", f.nominal_tolerance.friction}}}};
  j["sparse"] = {{"workers", f.sparse.workers}, {"burst_steps", f.sparse.burst_steps}};
  return j.dump(2) + "\n";
}

std::filesystem::path resolve_output_dir(const RunConfig& config, const std::string& cli_override) {
  if (!cli_override.empty()) return cli_override;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return config.output_dir;
}

std::string field_file_name(const Evaluation& round, const CriticalEvent& event) {
  return "fos_field_" + round.label + "_" + event.id() + ".csv";
}

std::string report_json(const SafetyReport& report) {
  ojson j;
  j["version"] = kReportVersion;
  j["decision"] = to_string(report.decision);
  j["exit_code"] = exit_code(report);
  j["epsilon"] = report.epsilon;
  j["seed"] = report.seed;
  j["probe_budget"] = report.probe_budget;
  j["probes_used"] = report.probes_used;
  j["probe_exhausted"] = report.probe_exhausted;
  ojson rounds = ojson::array();
  for (const Evaluation& r : report.rounds) {
    ojson jr;
    jr["label"] = r.label;
    jr["fresh_dense"] = r.fresh_dense;
    jr["distribution"] = distribution_json(r.spec);
    jr["nominal"] = params_json(r.nominal);
    if (r.nominal_unsafe_step) {
      jr["nominal_unsafe"] = {{"step", *r.nominal_unsafe_step}, {"reason", r.nominal_unsafe_reason}};
    } else {
      jr["nominal_unsafe"] = nullptr;
    }
    ojson events = ojson::array();
    for (const EventResult& e : r.events) {
      long failed = 0;
      for (char c : e.field.failed) failed += c != 0;
      events.push_back({{"id", e.event.id()},
                        {"cause", to_string(e.event.cause)},
                        {"step", e.event.step},
                        {"nominal_fos", e.event.nominal_fos},
                        {"score", e.score},
                        {"safe", e.safe},
                        {"grid", {e.field.n_mass, e.field.n_friction}},
                        {"solver_failures", failed},
                        {"field_file", field_file_name(r, e.event)}});
    }
    jr["events"] = std::move(events);
    jr["decision"] = to_string(r.decision);
    rounds.push_back(std::move(jr));
  }
  j["rounds"] = std::move(rounds);
  return j.dump(2) + "\n";
}

std::string timings_json(const SafetyReport& report) {
  ojson stages = ojson::object();
  for (const auto& [name, seconds] : report.timings) stages[name] = seconds;
  ojson j;
  j["version"] = kReportVersion;
  j["seconds"] = std::move(stages);
  return j.dump(2) + "\n";
}

std::string scores_csv(const SafetyReport& report) {
  std::string out = "cause,distribution,step,score,epsilon,safe\n";
  for (const Evaluation& r : report.rounds) {
    for (const EventResult& e : r.events) {
      out += std::string(to_string(e.event.cause)) + "," + r.label + "," + std::to_string(e.event.step) + "," +
             num(e.score) + "," + num(report.epsilon) + "," + (e.safe ? "1" : "0") + "\n";
    }
  }
  return out;
}

std::string field_csv(const FosField& field, const ParamGrid& grid) {
  if (field.size() != grid.size() || grid.weights.size() != grid.size()) {
    throw InvalidArgument("field and grid sizes differ");
  }
  std::string out = "mass,friction,weight,fos_inv,fos_contact_inv,fos_motor_inv,solver_failed\n";
  for (std::size_t i = 0; i < field.size(); ++i) {
    out += num(grid.points[i].mass) + "," + num(grid.points[i].friction) + "," + num(grid.weights[i]) + "," +
           num(field.combined[i]) + "," + num(field.contact[i]) + "," + num(field.motor[i]) + "," +
           (field.failed[i] ? "1" : "0") + "\n";
  }
  return out;
}

void write_filter_artifacts(const SafetyReport& report, const RunConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  spill(dir / "report.json", report_json(report));
  spill(dir / "scores.csv", scores_csv(report));
  spill(dir / "timings.json", timings_json(report));
  spill(dir / "config.json", dump_config(config));
  for (const Evaluation& r : report.rounds) {
    if (r.events.empty()) continue;
    // Cell centres depend only on the domain, so the round's own weights
    // apply to re-weighted fields as well.
    const ParamGrid grid = make_grid(r.spec, config.filter.grid_n, config.filter.grid_n);
    for (const EventResult& e : r.events) spill(dir / field_file_name(r, e.event), field_csv(e.field, grid));
  }
}

std::string trajectory_csv(const HandoverWorld& world, const Trajectory& t) {
  const MultibodySystem& sys = world.system;
  const double dt = world.config.dt;
  std::string out = "step,time,box_x,box_z,box_angle,box_vx,box_vz,box_omega,box_ax,box_az,box_alpha";
  for (int m = 0; m < sys.motor_count(); ++m) {
    const std::string& n = sys.constraints()[static_cast<std::size_t>(sys.motors()[static_cast<std::size_t>(m)])].name;
    out += "," + n + "_effort," + n + "_limit," + n + "_ratio";
  }
  out += ",fos_contact,fos_motor,fos_combined,reward\n";
  const auto b = static_cast<std::size_t>(world.box);
  // Row k describes transition k-1 -> k: the state it produced, the efforts
  // the solver applied and the factors of safety evaluated on that state.
  for (std::size_t k = 1; k < t.states.size(); ++k) {
    const SystemState& s = t.states[k];
    const Vec3 a = (s.v[b] - t.states[k - 1].v[b]) / dt;
    out += std::to_string(k) + "," + num(static_cast<double>(k) * dt);
    for (int i = 0; i < 3; ++i) out += "," + num(s.x[b][i]);
    for (int i = 0; i < 3; ++i) out += "," + num(s.v[b][i]);
    for (int i = 0; i < 3; ++i) out += "," + num(a[i]);
    for (int m = 0; m < sys.motor_count(); ++m) {
      const double effort = motor_effort(sys, s, m);
      const double limit = motor_limit(sys, m);
      out += "," + num(effort) + "," + num(limit) + "," + num(std::abs(effort) / limit);
    }
    const FosSample& f = t.fos[k];
    out += "," + num(f.contact) + "," + num(f.motor) + "," + num(f.combined) + "," + std::to_string(t.rewards[k]) + "\n";
  }
  return out;
}

std::string trajectory_meta_json(const HandoverWorld& world, const Trajectory& t) {
  ojson j;
  j["version"] = kReportVersion;
  j["theta"] = params_json(t.theta);
  j["dt"] = world.config.dt;
  j["horizon"] = t.horizon();
  j["final_reward"] = t.rewards.empty() ? 0 : t.rewards.back();
  double peak = 0.0;
  long peak_step = 0;
  for (std::size_t k = 0; k < t.fos.size(); ++k) {
    if (t.fos[k].combined > peak) {
      peak = t.fos[k].combined;
      peak_step = static_cast<long>(k);
    }
  }
  j["peak_fos"] = {{"value", peak}, {"step", peak_step}};
  ojson motors = ojson::array();
  for (int m = 0; m < world.system.motor_count(); ++m) {
    const auto& def = world.system.constraints()[static_cast<std::size_t>(world.system.motors()[static_cast<std::size_t>(m)])];
    motors.push_back({{"index", m}, {"name", def.name}, {"limit", motor_limit(world.system, m)}});
  }
  j["motors"] = std::move(motors);
  const std::vector<CriticalEvent> events = select_critical(t);
  ojson je = ojson::array();
  for (const auto& e : events) je.push_back({{"id", e.id()}, {"step", e.step}, {"nominal_fos", e.nominal_fos}});
  j["critical_events"] = std::move(je);
  return j.dump(2) + "\n";
}

void write_rollout_artifacts(const HandoverWorld& world, const Trajectory& trajectory,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  spill(dir / "trajectory.csv", trajectory_csv(world, trajectory));
  spill(dir / "trajectory_meta.json", trajectory_meta_json(world, trajectory));
}

std::string summarize_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    std::ostringstream os;
    os << "decision: " << j.at("decision").get<std::string>() << " (exit " << j.at("exit_code").get<int>() << ")\n";
    os << "epsilon: " << num(j.at("epsilon").get<double>()) << ", probes used " << j.at("probes_used").get<int>()
       << " of " << j.at("probe_budget").get<int>() << (j.at("probe_exhausted").get<bool>() ? " (exhausted)" : "")
       << "\n";
    for (const auto& r : j.at("rounds")) {
      const auto& mean = r.at("distribution").at("mean");
      const auto& sigma = r.at("distribution").at("sigma");
      char head[200];
      std::snprintf(head, sizeof head, "round %s: mean (%.3g, %.3g) sigma (%.3g, %.3g)%s -> %s\n",
                    r.at("label").get<std::string>().c_str(), mean.at("mass").get<double>(),
                    mean.at("friction").get<double>(), sigma.at("mass").get<double>(),
                    sigma.at("friction").get<double>(), r.at("fresh_dense").get<bool>() ? "" : " [re-weighted]",
                    r.at("decision").get<std::string>().c_str());
      os << head;
      if (!r.at("nominal_unsafe").is_null()) {
        os << "  nominal unsafe: " << r.at("nominal_unsafe").at("reason").get<std::string>() << "\n";
      }
      for (const auto& e : r.at("events")) {
        char line[200];
        std::snprintf(line, sizeof line, "  %-8s step %5ld  S = %.4f  %s\n",
                      e.at("cause").get<std::string>().c_str(), e.at("step").get<long>(), e.at("score").get<double>(),
                      e.at("safe").get<bool>() ? "safe" : "unsafe");
        os << line;
      }
    }
    return os.str();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("report is missing fields: ") + e.what());
  }
}

std::string feasibility_table(const FeasibilityInput& in) {
  const FeasibilityOutput a = budget(in);
  const FeasibilityOutput b = budget_ratio_variant(in);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "tau %g, threads %g, alpha %g, sequential penalty %g, overhead %g\n"
                "%-12s %16s %16s\n"
                "%-12s %16.0f %16.0f\n"
                "%-12s %16.0f %16.0f\n",
                in.tau, in.threads, in.alpha, in.sequential_penalty, in.overhead, "budget", "dense/s", "sparse/s",
                "K*tau", a.dense, a.sparse, "K/tau", b.dense, b.sparse);
  return buf;
}

}  // namespace psf
