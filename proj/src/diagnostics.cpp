#include "momlab/diagnostics.hpp"

#include <nlohmann/json.hpp>

#include <istream>
#include <ostream>
#include <sstream>

namespace momlab {

std::string TrainTrace::display_label() const {
  if (!label.empty()) return label;
  return fingerprint.substr(0, std::min<std::size_t>(8, fingerprint.size()));
}

std::vector<double> TrainTrace::losses() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.loss);
  return out;
}

TrainTrace annotate_alignment(TrainTrace trace, const ReferencePoint& ref) {
  if (trace.snapshots.size() != trace.rows.size())
    throw InvalidArgument("annotate_alignment: trace has no snapshot for every logged row");
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& snap = trace.snapshots[i];
    if (snap.step != trace.rows[i].step) throw InvalidArgument("annotate_alignment: snapshot/row step mismatch");
    if (snap.w.size() != ref.x_star.size()) throw InvalidArgument("annotate_alignment: reference dimension mismatch");
    trace.rows[i].alignment = alignment(snap.g, snap.w, ref.x_star);
  }
  return trace;
}

ReferencePoint final_iterate_reference(const TrainTrace& trace) {
  if (trace.snapshots.empty()) throw InvalidArgument("final_iterate_reference: trace has no snapshots");
  return {trace.snapshots.back().w, ReferenceSource::final_iterate};
}

Diagnostic tail_mean_scale(const TrainTrace& trace, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("tail_mean_scale: fraction must be in (0, 1]");
  const std::size_t n = trace.rows.size();
  if (n == 0) return std::nullopt;
  std::size_t k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = n - k; i < n; ++i)
    if (trace.rows[i].scale) {
      sum += *trace.rows[i].scale;
      ++count;
    }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

Diagnostic mean_alignment(const TrainTrace& trace) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : trace.rows)
    if (r.alignment) {
      sum += *r.alignment;
      ++count;
    }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.step << ',' << r.epoch << ',' << r.phase_index << ',' << format_double(r.loss) << ','
        << format_double(r.grad_norm) << ',' << format_double(r.momentum_norm) << ',' << format_optional(r.scale)
        << ',' << format_optional(r.alignment) << ',' << format_optional(r.eta_effective) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::int64_t parse_int(const std::string& s) {
  std::size_t pos = 0;
  const long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw InvalidArgument("not an integer: '" + s + "'");
  return v;
}

}  // namespace

TrainTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("trace csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) throw InvalidArgument("trace csv: unexpected header '" + line + "'");
  TrainTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw InvalidArgument("trace csv: line " + std::to_string(lineno) + " has wrong field count");
    TraceRow r;
    r.step = parse_int(f[0]);
    r.epoch = parse_int(f[1]);
    r.phase_index = static_cast<int>(parse_int(f[2]));
    r.loss = parse_double(f[3]);
    r.grad_norm = parse_double(f[4]);
    r.momentum_norm = parse_double(f[5]);
    r.scale = parse_optional(f[6]);
    r.alignment = parse_optional(f[7]);
    r.eta_effective = parse_optional(f[8]);
    trace.rows.push_back(r);
  }
  return trace;
}

namespace {

nlohmann::json optional_json(const Diagnostic& d) { return d ? nlohmann::json(*d) : nlohmann::json(nullptr); }

Diagnostic optional_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const TrainTrace& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace.rows) {
    rows.push_back({{"step", r.step},
                    {"epoch", r.epoch},
                    {"phase", r.phase_index},
                    {"loss", r.loss},
                    {"grad_norm", r.grad_norm},
                    {"momentum_norm", r.momentum_norm},
                    {"scale", optional_json(r.scale)},
                    {"alignment", optional_json(r.alignment)},
                    {"eta_effective", optional_json(r.eta_effective)}});
  }
  nlohmann::json j = {{"version", 1}, {"fingerprint", trace.fingerprint}, {"label", trace.label}, {"rows", rows}};
  j["divergence_step"] = trace.divergence_step ? nlohmann::json(*trace.divergence_step) : nlohmann::json(nullptr);
  return j;
}

TrainTrace trace_from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != 1) throw InvalidArgument("trace json: unsupported version");
  TrainTrace t;
  t.fingerprint = j.at("fingerprint").get<std::string>();
  t.label = j.value("label", "");
  if (!j.at("divergence_step").is_null()) t.divergence_step = j.at("divergence_step").get<std::int64_t>();
  for (const auto& r : j.at("rows")) {
    TraceRow row;
    row.step = r.at("step").get<std::int64_t>();
    row.epoch = r.at("epoch").get<std::int64_t>();
    row.phase_index = r.at("phase").get<int>();
    row.loss = r.at("loss").get<double>();
    row.grad_norm = r.at("grad_norm").get<double>();
    row.momentum_norm = r.at("momentum_norm").get<double>();
    row.scale = optional_from_json(r.at("scale"));
    row.alignment = optional_from_json(r.at("alignment"));
    row.eta_effective = optional_from_json(r.at("eta_effective"));
    t.rows.push_back(row);
  }
  return t;
}

std::string config_fingerprint(const nlohmann::json& config) { return hex64(fnv1a(config.dump())); }

}  // namespace momlab
