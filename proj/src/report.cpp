#include "fbllab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fbllab {

namespace {

Json vectors(const std::vector<Vector>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) {
    Json row = Json::array();
    for (double c : v) row.push_back(number(c));
    a.push_back(std::move(row));
  }
  return a;
}

Json values(const std::vector<double>& v) {
  Json a = Json::array();
  for (double c : v) a.push_back(number(c));
  return a;
}

Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void dump(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += inner + Json(it.key()).dump() + ": ";
      dump(it.value(), indent + 1, out);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    // Arrays of scalars stay on one line.
    const bool flat = std::none_of(j.begin(), j.end(), [](const Json& x) { return x.is_structured(); });
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        dump(j[i], indent + 1, out);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += inner;
      dump(j[i], indent + 1, out);
    }
    out += "\n" + pad + "]";
  } else if (j.is_number_float()) {
    out += format_double(j.get<double>());
  } else {
    out += j.dump();
  }
}

void flatten(const Json& j, const std::string& path, std::string& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "." + std::to_string(i), out);
  } else {
    std::string v;
    if (j.is_number_float())
      v = format_double(j.get<double>());
    else if (j.is_string())
      v = j.get<std::string>();
    else
      v = j.dump();
    out += path + "," + v + "\n";
  }
}

}  // namespace

Json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string dump_json(const Json& j) {
  std::string out;
  dump(j, 0, out);
  out += "\n";
  return out;
}

std::string flatten_csv(const Json& j) {
  std::string out = "key,value\n";
  flatten(j, "", out);
  return out;
}

Json to_json(const NormEstimate& e) {
  Json j;
  j["p"] = number(e.p);
  j["q"] = number(e.q);
  j["lower"] = number(e.lower);
  j["upper"] = optional_number(e.upper);
  j["witness"] = vectors(e.witness.functionals);
  j["seed"] = e.method.seed;
  j["schedule"] = e.method.schedule;
  return j;
}

Json to_json(const DominationCertificate& c) {
  Json j;
  j["p"] = number(c.p);
  j["C"] = number(c.C);
  j["atoms"] = vectors(c.atoms);
  j["weights"] = values(c.weights);
  j["constraints_used"] = c.constraints_used;
  j["grid"] = c.grid;
  return j;
}

Json to_json(const CertificateReport& r) {
  Json j;
  j["samples"] = r.samples;
  j["max_excess"] = number(r.max_excess);
  j["domination_ok"] = r.domination_ok;
  j["weight_sum"] = number(r.weight_sum);
  j["weights_ok"] = r.weights_ok;
  j["max_atom_norm"] = number(r.max_atom_norm);
  j["atoms_ok"] = r.atoms_ok;
  j["fmu_norm"] = number(r.fmu_norm);
  j["fmu_tolerance"] = number(r.fmu_tolerance);
  j["fmu_ok"] = r.fmu_ok;
  j["ok"] = r.ok();
  return j;
}

Json to_json(const LpExtension& x) {
  Json j;
  j["p"] = number(x.p);
  j["tuple"] = vectors(x.tuple.functionals);
  j["operator_norm"] = number(x.operator_norm);
  j["generator_images"] = vectors(x.generator_images);
  return j;
}

Json to_json(const ExtensionReport& r) {
  Json j;
  j["image_norm"] = number(r.image_norm);
  j["operator_norm"] = number(r.operator_norm);
  j["rho"] = number(r.rho);
  j["lower"] = number(r.lower);
  j["upper"] = optional_number(r.upper);
  j["in_pool"] = r.in_pool;
  j["lower_ok"] = r.lower_ok;
  j["upper_ok"] = r.upper_ok;
  j["updated_lower"] = number(r.updated_lower);
  j["ok"] = r.ok();
  return j;
}

Json to_json(const DConvexityReport& r) {
  Json j;
  j["s"] = number(r.s);
  j["theta"] = r.theta;
  j["M"] = number(r.M);
  j["samples"] = r.samples;
  j["violations"] = r.violations;
  j["worst_ratio"] = number(r.worst_ratio);
  if (r.first_violation) {
    Json v;
    v["sample"] = *r.first_violation;
    v["inputs"] = vectors(r.violation_inputs);
    v["lhs"] = number(r.violation_lhs);
    v["rhs"] = number(r.violation_rhs);
    j["first_violation"] = std::move(v);
  } else {
    j["first_violation"] = nullptr;
  }
  return j;
}

Json to_json(const SupNorm& s) {
  Json j;
  j["value"] = number(s.value);
  j["witness"] = values(s.witness);
  j["exact"] = s.exact;
  return j;
}

Json to_json(const WeakNorm& w) {
  Json j;
  j["value"] = number(w.value);
  j["witness"] = values(w.witness);
  j["exact"] = w.exact;
  return j;
}

Json to_json(const InclusionReport& r) {
  Json j;
  j["first"] = {{"p", number(r.first.p)}, {"q", number(r.first.q)}};
  j["second"] = {{"p", number(r.second.p)}, {"q", number(r.second.q)}};
  j["first_estimate"] = to_json(r.first_estimate);
  j["second_estimate"] = to_json(r.second_estimate);
  j["tolerance"] = number(r.tolerance);
  j["ok"] = r.ok;
  return j;
}

Json to_json(const DivergenceReport& r) {
  Json j;
  j["p"] = number(r.p);
  j["q"] = number(r.q);
  j["slope"] = number(r.slope);
  j["expected"] = number(r.expected);
  j["probe"] = values(r.probe);
  j["lengths"] = r.lengths;
  j["scores"] = values(r.scores);
  return j;
}

Json to_json(const CotypeTable& t) {
  Json j;
  j["p"] = number(t.p);
  j["q"] = number(t.q);
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    Json row;
    row["dim"] = r.dim;
    row["max_ratio"] = number(r.max_ratio);
    row["ratios"] = values(r.ratios);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace fbllab
