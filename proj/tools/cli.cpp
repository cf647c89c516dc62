#include "cli.hpp"

#include "contraction/certification.hpp"
#include "contraction/interconnection.hpp"
#include "contraction/semicontraction.hpp"
#include "contraction/simulation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace contraction::cli {

using nlohmann::json;

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Config access. Every read fills the default into the resolved config.

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

json& section(json& obj, const char* key) {
  if (!obj.contains(key)) obj[key] = json::object();
  if (!obj[key].is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return obj[key];
}

template <typename T>
T take(json& obj, const char* key, const T& fallback) {
  if (!obj.contains(key)) obj[key] = fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("'") + key + "' has the wrong type");
  }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("'") + key + "' in " + where + " has the wrong type");
  }
}

Eigen::VectorXd to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must be an array of numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError(what + " must be a nonempty array of rows");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd M(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ConfigError(what + " rows must have equal length");
    M.row(static_cast<Index>(i)) = to_vector(j[i], what).transpose();
  }
  return M;
}

json from_vector(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json from_matrix(const Eigen::MatrixXd& M) {
  json out = json::array();
  for (Index i = 0; i < M.rows(); ++i) out.push_back(from_vector(M.row(i).transpose()));
  return out;
}

// ---------------------------------------------------------------------------
// Domain objects from config sections.

NormSpec resolve_norm_object(json& nj, int n) {
  check_keys(nj, "norm", {"p", "weight", "weight_convention"});
  if (!nj.contains("p")) nj["p"] = 2.0;
  double p;
  if (nj["p"].is_string()) {
    if (nj["p"].get<std::string>() != "inf") throw ConfigError("norm p must be a number >= 1 or \"inf\"");
    p = kInfinity;
  } else if (nj["p"].is_number()) {
    p = nj["p"].get<double>();
  } else {
    throw ConfigError("norm p must be a number >= 1 or \"inf\"");
  }
  const auto convention = take<std::string>(nj, "weight_convention", "R");
  if (convention != "R" && convention != "P") throw ConfigError("weight_convention must be \"R\" or \"P\"");
  try {
    if (!nj.contains("weight")) return NormSpec::unweighted(p, n);
    const Eigen::MatrixXd W = to_matrix(nj["weight"], "norm weight");
    require_dim(W.rows(), n, "norm weight");
    if (convention == "P") {
      if (p != 2.0) throw ConfigError("weight_convention \"P\" is only defined for p = 2");
      return NormSpec::from_spd(W);
    }
    return NormSpec::weighted(p, W);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("norm: ") + e.what());
  }
}

NormSpec resolve_norm(json& cfg, int n) { return resolve_norm_object(section(cfg, "norm"), n); }

PairingKind resolve_pairing(json& cfg, const NormSpec& spec) {
  if (!cfg.contains("pairing")) cfg["pairing"] = to_string(default_pairing(spec).variant);
  if (!cfg["pairing"].is_string()) throw ConfigError("pairing must be a string");
  PairingKind kind;
  try {
    kind = pairing_kind(parse_pairing_variant(cfg["pairing"].get<std::string>()));
  } catch (const PairingError& e) {
    throw ConfigError(e.what());
  }
  if (kind.variant == PairingVariant::single_index) {
    const auto choice = take<std::string>(cfg, "pairing_index", "smallest");
    if (choice == "largest") {
      kind.choice = largest_index;
    } else if (choice != "smallest") {
      throw ConfigError("pairing_index must be \"smallest\" or \"largest\"");
    }
  }
  if (!compatible(kind, spec)) throw ConfigError("pairing is incompatible with the norm exponent");
  return kind;
}

VectorFieldModel resolve_system(json& cfg) {
  if (!cfg.contains("system")) throw ConfigError("missing 'system'");
  json& sj = section(cfg, "system");
  try {
    if (sj.contains("builtin")) {
      const auto name = require<std::string>(sj, "builtin", "system");
      if (name == "counterexample") {
        check_keys(sj, "system", {"builtin"});
        return builtin::counterexample();
      }
      if (name == "linear") {
        check_keys(sj, "system", {"builtin", "A"});
        return builtin::linear(to_matrix(require<json>(sj, "A", "system"), "A"));
      }
      if (name == "hopfield") {
        check_keys(sj, "system", {"builtin", "a", "T", "bias"});
        const Eigen::VectorXd a = to_vector(require<json>(sj, "a", "system"), "a");
        if (!sj.contains("bias")) sj["bias"] = from_vector(Eigen::VectorXd::Zero(a.size()));
        return builtin::hopfield(a, to_matrix(require<json>(sj, "T", "system"), "T"),
                                 to_vector(sj["bias"], "bias"));
      }
      if (name == "scalar_iss") {
        check_keys(sj, "system", {"builtin", "c", "ell"});
        return builtin::scalar_iss(require<double>(sj, "c", "system"), require<double>(sj, "ell", "system"));
      }
      throw ConfigError("unknown builtin system '" + name + "'");
    }
    check_keys(sj, "system", {"expressions", "state_dim", "input_dim", "x_star", "name"});
    if (!sj.contains("expressions")) throw ConfigError("system needs 'builtin' or 'expressions'");
    std::string source;
    const json& ex = sj["expressions"];
    if (ex.is_string()) {
      source = ex.get<std::string>();
    } else if (ex.is_array()) {
      for (const auto& e : ex) {
        if (!e.is_string()) throw ConfigError("expressions must be strings");
        source += e.get<std::string>() + "\n";
      }
    } else {
      throw ConfigError("expressions must be a string or an array of strings");
    }
    const int count = static_cast<int>(parse_expression_list(source, 1 << 20, 1 << 20).size());
    const int n = take<int>(sj, "state_dim", count);
    const int k = take<int>(sj, "input_dim", 0);
    const auto name = take<std::string>(sj, "name", "expression");
    std::vector<Expr> comps = parse_expression_list(source, n, k);
    require_dim(static_cast<Index>(comps.size()), n, "number of expressions");
    std::optional<Eigen::VectorXd> x_star;
    if (sj.contains("x_star")) x_star = to_vector(sj["x_star"], "x_star");
    return VectorFieldModel(name, n, k, std::move(comps), x_star);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

Region resolve_region(json& cfg, int n) {
  json& rj = section(cfg, "region");
  check_keys(rj, "region", {"lower", "upper", "half_width", "t0", "t1"});
  if (rj.contains("half_width")) {
    const double w = require<double>(rj, "half_width", "region");
    rj["lower"] = from_vector(Eigen::VectorXd::Constant(n, -w));
    rj["upper"] = from_vector(Eigen::VectorXd::Constant(n, w));
    rj.erase("half_width");
  }
  if (!rj.contains("lower")) rj["lower"] = from_vector(Eigen::VectorXd::Constant(n, -1.0));
  if (!rj.contains("upper")) rj["upper"] = from_vector(Eigen::VectorXd::Constant(n, 1.0));
  const double t0 = take<double>(rj, "t0", 0.0);
  const double t1 = take<double>(rj, "t1", t0);
  try {
    const Eigen::VectorXd lo = to_vector(rj["lower"], "region lower");
    require_dim(lo.size(), n, "region");
    return Region::box(lo, to_vector(rj["upper"], "region upper"), t0, t1);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("region: ") + e.what());
  }
}

SamplingOptions resolve_sampling(json& cfg, const RunOptions& run) {
  json& sj = section(cfg, "sampling");
  check_keys(sj, "sampling",
             {"state_samples", "direction_samples", "pair_samples", "time_samples", "polish_top",
              "near_pair_epsilon", "seed", "restarts", "max_iterations"});
  SamplingOptions o;
  o.state_samples = take<int>(sj, "state_samples", o.state_samples);
  o.direction_samples = take<int>(sj, "direction_samples", o.direction_samples);
  o.pair_samples = take<int>(sj, "pair_samples", o.pair_samples);
  o.time_samples = take<int>(sj, "time_samples", o.time_samples);
  o.polish_top = take<int>(sj, "polish_top", o.polish_top);
  o.near_pair_epsilon = take<double>(sj, "near_pair_epsilon", o.near_pair_epsilon);
  o.seed = take<std::uint64_t>(sj, "seed", 0);
  o.measure.restarts = take<int>(sj, "restarts", o.measure.restarts);
  o.measure.max_iterations = take<int>(sj, "max_iterations", o.measure.max_iterations);
  o.measure.seed = o.seed;
  o.threads = run.threads;
  if (o.state_samples < 1 || o.pair_samples < 1 || o.direction_samples < 1 || o.time_samples < 1 ||
      o.polish_top < 0 || !(o.near_pair_epsilon > 0.0) || o.measure.restarts < 1 ||
      o.measure.max_iterations < 1) {
    throw ConfigError("sampling counts must be positive");
  }
  return o;
}

Signal resolve_signal(json& sj, int k, const std::string& where) {
  check_keys(sj, where, {"type", "value", "time", "amplitude", "frequency", "phase", "rate"});
  const auto type = require<std::string>(sj, "type", where);
  const auto vec = [&](const char* key) {
    const Eigen::VectorXd v = to_vector(require<json>(sj, key, where), where + "." + key);
    if (v.size() != k) throw ConfigError(where + "." + key + " must have one entry per input");
    return v;
  };
  if (type == "constant") {
    const Eigen::VectorXd v = vec("value");
    return [v](double) { return v; };
  }
  if (type == "step") {
    const Eigen::VectorXd v = vec("value");
    const double at = take<double>(sj, "time", 0.0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);
    return [v, at, zero](double t) { return t >= at ? v : zero; };
  }
  if (type == "sin") {
    const Eigen::VectorXd a = vec("amplitude");
    const double w = take<double>(sj, "frequency", 1.0);
    const double phase = take<double>(sj, "phase", 0.0);
    return [a, w, phase](double t) { return Eigen::VectorXd(a * std::sin(w * t + phase)); };
  }
  if (type == "exp") {
    const Eigen::VectorXd a = vec("amplitude");
    const double r = take<double>(sj, "rate", 1.0);
    return [a, r](double t) { return Eigen::VectorXd(a * std::exp(-r * t)); };
  }
  throw ConfigError("unknown signal type '" + type + "' in " + where);
}

// ---------------------------------------------------------------------------
// Report fragments.

json witness_json(const Witness& w) {
  json j{{"t", w.t}, {"x", from_vector(w.x)}};
  if (w.aux.size() > 0) j["aux"] = from_vector(w.aux);
  return j;
}

json certificate_json(const ContractionCertificate& c) {
  json j{{"condition", to_string(c.condition)},
         {"bound_b", c.bound_b},
         {"contracting", c.contracting()},
         {"samples", c.samples},
         {"pairing", to_string(c.kind.variant)},
         {"worst_witness", witness_json(c.worst_witness)},
         {"kink_surfaces", c.kink_surfaces}};
  if (c.x_star) j["x_star"] = from_vector(*c.x_star);
  return j;
}

json trajectory_summary(const Trajectory& t) {
  json j{{"points", t.size()}, {"final_time", t.final_time()}, {"final_state", from_vector(t.states.back())}};
  if (t.blowup_time) j["blowup_time"] = *t.blowup_time;
  return j;
}

void write_file(const RunOptions& run, const std::string& name, const std::string& text) {
  if (run.out_dir.empty()) return;
  std::filesystem::create_directories(run.out_dir);
  std::ofstream os(std::filesystem::path(run.out_dir) / name);
  if (!os) throw std::runtime_error("cannot write " + name + " in " + run.out_dir);
  os << text;
}

void write_trajectory(const RunOptions& run, const std::string& name, const Trajectory& t) {
  if (run.out_dir.empty()) return;
  std::ostringstream os;
  write_csv(os, t);
  write_file(run, name, os.str());
}

// ---------------------------------------------------------------------------
// Commands.

CommandResult cmd_measure(json& cfg, const RunOptions& run) {
  check_keys(cfg, "config", {"schema_version", "matrix", "system", "point", "norm", "sampling"});
  Eigen::MatrixXd A;
  if (cfg.contains("matrix")) {
    A = to_matrix(cfg["matrix"], "matrix");
    if (A.rows() != A.cols()) throw ConfigError("matrix must be square");
  } else {
    const VectorFieldModel model = resolve_system(cfg);
    json& pj = section(cfg, "point");
    check_keys(pj, "point", {"t", "x"});
    const double t = take<double>(pj, "t", 0.0);
    const Eigen::VectorXd x = to_vector(require<json>(pj, "x", "point"), "point.x");
    if (x.size() != model.state_dim()) throw ConfigError("point.x does not match the state dimension");
    A = model.eval_jacobian(t, x);
  }
  const NormSpec spec = resolve_norm(cfg, static_cast<int>(A.rows()));
  const SamplingOptions opts = resolve_sampling(cfg, run);
  const MeasureResult m = matrix_measure(A, spec, opts.measure);
  json result{{"value", m.value},
              {"method", m.method == MeasureMethod::closed_form ? "closed_form" : "optimized"},
              {"witness", from_vector(m.witness)},
              {"gap_estimate", m.gap_estimate},
              {"matrix", from_matrix(A)}};
  return {json{{"result", result}}, success};
}

CommandResult certify_semi(json& cfg, const VectorFieldModel& model, const Region& region,
                           const SamplingOptions& opts, const std::string& condition) {
  json& sj = section(cfg, "semi");
  check_keys(sj, "semi", {"projector", "p"});
  const json pj = sj.contains("projector") ? sj["projector"] : json("consensus");
  sj["projector"] = pj;
  const double p = take<double>(sj, "p", 2.0);
  std::optional<SemiNormSpec> s;
  try {
    if (pj.is_string()) {
      if (pj.get<std::string>() != "consensus") throw ConfigError("projector must be a matrix or \"consensus\"");
      s = SemiNormSpec::consensus(model.state_dim(), p);
    } else {
      const Eigen::MatrixXd P = to_matrix(pj, "projector");
      s.emplace(P, NormSpec::unweighted(p, P.rows()));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("semi: ") + e.what());
  }
  if (s->cols() != model.state_dim()) throw ConfigError("projector columns must match the state dimension");
  const PairingKind kind = resolve_pairing(cfg, s->base());
  json result;
  bool contracting;
  if (condition == "semi") {
    const SemiCertificate c = certify_semicontraction(model, *s, kind, region, opts);
    result = json{{"condition", "semi"},
                  {"bound_b", c.bound_b},
                  {"measure_witness", witness_json(c.measure_witness)},
                  {"osl_bound", c.osl_bound},
                  {"osl_witness", witness_json(c.osl_witness)},
                  {"samples", c.samples},
                  {"kink_surfaces", c.kink_surfaces}};
    contracting = c.contracting();
  } else {
    const Eigen::VectorXd x_star = cfg.contains("x_star") ? to_vector(cfg["x_star"], "x_star")
                                                          : Eigen::VectorXd::Zero(model.state_dim());
    cfg["x_star"] = from_vector(x_star);
    if (x_star.size() != model.state_dim()) throw ConfigError("x_star does not match the state dimension");
    const SubspaceCertificate c = certify_subspace_contraction(model, x_star, *s, kind, region, opts);
    result = json{{"condition", "subspace"},
                  {"bound_b", c.bound_b},
                  {"worst_witness", witness_json(c.witness)},
                  {"x_star", from_vector(c.x_star)},
                  {"hypothesis_residual", c.hypothesis_residual},
                  {"samples", c.samples}};
    contracting = c.contracting();
  }
  result["contracting"] = contracting;
  return {json{{"result", result}}, contracting ? success : negative};
}

CommandResult cmd_certify(json& cfg, const RunOptions& run) {
  check_keys(cfg, "config",
             {"schema_version", "system", "norm", "pairing", "pairing_index", "region", "sampling",
              "condition", "x_star", "semi"});
  const VectorFieldModel model = resolve_system(cfg);
  const int n = model.state_dim();
  const Region region = resolve_region(cfg, n);
  const SamplingOptions opts = resolve_sampling(cfg, run);
  const auto condition = take<std::string>(cfg, "condition", "measure");
  if (condition == "semi" || condition == "subspace") return certify_semi(cfg, model, region, opts, condition);
  const NormSpec spec = resolve_norm(cfg, n);
  const PairingKind kind = resolve_pairing(cfg, spec);
  std::optional<ContractionCertificate> cert;
  if (condition == "measure") {
    cert = sup_jacobian_measure(model, spec, region, opts);
  } else if (condition == "factored") {
    if (!model.has_factorization()) throw ConfigError("system supplies no factorization A(t, x)");
    cert = factored_measure(model, spec, region, opts);
  } else if (condition == "demidovich") {
    cert = sup_demidovich(model, spec, kind, region, opts);
  } else if (condition == "osl") {
    cert = estimate_osL(model, spec, kind, region, opts);
  } else if (condition == "equilibrium") {
    Eigen::VectorXd x_star;
    if (cfg.contains("x_star")) {
      x_star = to_vector(cfg["x_star"], "x_star");
    } else if (model.equilibrium()) {
      x_star = *model.equilibrium();
    } else {
      throw ConfigError("condition 'equilibrium' needs x_star");
    }
    if (x_star.size() != n) throw ConfigError("x_star does not match the state dimension");
    cfg["x_star"] = from_vector(x_star);
    cert = check_equilibrium_contraction(model, x_star, spec, kind, region, opts);
  } else {
    throw ConfigError("unknown condition '" + condition + "'");
  }
  return {json{{"result", certificate_json(*cert)}}, cert->contracting() ? success : negative};
}

CommandResult cmd_simulate(json& cfg, const RunOptions& run) {
  check_keys(cfg, "config", {"schema_version", "system", "norm", "input_norm", "simulate"});
  const VectorFieldModel model = resolve_system(cfg);
  const int n = model.state_dim();
  const int k = model.input_dim();
  const NormSpec spec = resolve_norm(cfg, n);
  json& sj = section(cfg, "simulate");
  check_keys(sj, "simulate",
             {"t0", "T", "h", "x0", "y0", "x_star", "inputs", "envelope_b", "envelope_tol", "iss", "gain"});
  const double t0 = take<double>(sj, "t0", 0.0);
  const double T = take<double>(sj, "T", 10.0);
  const double h = take<double>(sj, "h", 1e-3);
  if (!(h > 0.0) || !(T >= h)) throw ConfigError("simulate needs h > 0 and T >= h");
  const Eigen::VectorXd x0 = to_vector(require<json>(sj, "x0", "simulate"), "x0");
  if (x0.size() != n) throw ConfigError("x0 does not match the state dimension");

  Signal u_x;
  Signal u_y;
  if (k > 0) {
    json& ij = section(sj, "inputs");
    check_keys(ij, "inputs", {"x", "y"});
    if (!ij.contains("x")) ij["x"] = json{{"type", "constant"}, {"value", from_vector(Eigen::VectorXd::Zero(k))}};
    if (!ij.contains("y")) ij["y"] = json{{"type", "constant"}, {"value", from_vector(Eigen::VectorXd::Zero(k))}};
    u_x = resolve_signal(ij["x"], k, "inputs.x");
    u_y = resolve_signal(ij["y"], k, "inputs.y");
  }
  json result;
  int code = success;
  const Trajectory x = integrate(model, t0, x0, T, h, u_x);
  write_trajectory(run, "trajectory_x.csv", x);
  result["trajectory_x"] = trajectory_summary(x);
  if (x.blowup_time) code = negative;

  std::optional<Trajectory> y;
  if (sj.contains("y0")) {
    const Eigen::VectorXd y0 = to_vector(sj["y0"], "y0");
    if (y0.size() != n) throw ConfigError("y0 does not match the state dimension");
    y = integrate(model, t0, y0, T, h, u_y);
    write_trajectory(run, "trajectory_y.csv", *y);
    result["trajectory_y"] = trajectory_summary(*y);
    if (y->blowup_time) code = negative;
  } else if (sj.contains("x_star") || model.equilibrium()) {
    const Eigen::VectorXd xs = sj.contains("x_star") ? to_vector(sj["x_star"], "x_star") : *model.equilibrium();
    if (xs.size() != n) throw ConfigError("x_star does not match the state dimension");
    sj["x_star"] = from_vector(xs);
    y = constant_trajectory(x, xs);
  }

  if (sj.contains("envelope_b")) {
    if (!y) throw ConfigError("envelope check needs y0 or an equilibrium");
    const double b = require<double>(sj, "envelope_b", "simulate");
    if (x.blowup_time || y->size() != x.size()) {
      result["envelope"] = json{{"pass", false}, {"reason", "trajectory blew up"}};
    } else {
      const double d0 = norm(Eigen::VectorXd(x.states[0] - y->states[0]), spec);
      const double tol = take<double>(sj, "envelope_tol", 1e-4 * (1.0 + d0));
      const EnvelopeReport r = envelope_check(x, *y, spec, b, tol);
      result["envelope"] = json{{"b", r.b},
                                {"tol", tol},
                                {"max_violation", r.max_violation},
                                {"pass", r.pass},
                                {"worst_s", x.time(r.worst_s)},
                                {"worst_t", x.time(r.worst_t)}};
      if (!r.pass) code = negative;
    }
  }

  std::optional<NormSpec> spec_u;
  if (sj.contains("iss") || sj.contains("gain")) {
    if (k == 0) throw ConfigError("ISS and gain experiments need a system with inputs");
    spec_u = resolve_norm_object(section(cfg, "input_norm"), k);
  }
  if (sj.contains("iss")) {
    json& iss = section(sj, "iss");
    check_keys(iss, "iss", {"c", "ell", "tol"});
    const double c = require<double>(iss, "c", "iss");
    const double ell = require<double>(iss, "ell", "iss");
    const double tol = take<double>(iss, "tol", 1e-6);
    const Eigen::VectorXd y0 = sj.contains("y0") ? to_vector(sj["y0"], "y0") : x0;
    const IssReport r = iss_experiment(model, u_x, u_y, x0, y0, c, ell, spec, *spec_u, T, h, tol);
    result["iss"] = json{{"max_violation", r.max_violation},
                         {"margin", r.margin},
                         {"pass", r.pass},
                         {"final_distance", r.distance.back()},
                         {"final_bound", r.bound.back()}};
    if (!r.pass) code = negative;
  }
  if (sj.contains("gain")) {
    json& gj = section(sj, "gain");
    check_keys(gj, "gain", {"c", "ell", "q"});
    const double c = require<double>(gj, "c", "gain");
    const double ell = require<double>(gj, "ell", "gain");
    if (!gj.contains("q")) gj["q"] = "inf";
    const double q = gj["q"].is_string() ? kInfinity : gj["q"].get<double>();
    const GainReport g = measure_gain(model, c, ell, spec, *spec_u, q, {u_x}, T, h, x0);
    result["gain"] = json{{"measured", g.measured}, {"bound", g.bound}, {"within_bound", g.measured <= g.bound + 1e-3}};
    if (!(g.measured <= g.bound + 1e-3)) code = negative;
  }
  return {json{{"result", result}}, code};
}

std::vector<SubsystemSpec> resolve_subsystems(json& nj, int& total) {
  if (!nj.contains("subsystems") || !nj["subsystems"].is_array() || nj["subsystems"].empty()) {
    throw ConfigError("network needs a nonempty 'subsystems' array");
  }
  json& subs = nj["subsystems"];
  total = 0;
  for (auto& s : subs) total += require<int>(s, "dim", "subsystem");
  std::vector<SubsystemSpec> out;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    json& s = subs[i];
    const std::string where = "subsystem " + std::to_string(i + 1);
    check_keys(s, where, {"name", "dim", "inputs", "expressions", "self_rate", "cross_gains", "norm", "pairing",
                          "pairing_index"});
    const auto name = take<std::string>(s, "name", "block" + std::to_string(i + 1));
    const int dim = require<int>(s, "dim", where);
    const int inputs = take<int>(s, "inputs", 0);
    if (dim < 1 || inputs < 0) throw ConfigError(where + " has invalid dimensions");
    const json& ex = require<json>(s, "expressions", where);
    if (!ex.is_array()) throw ConfigError(where + " expressions must be an array of strings");
    std::vector<Expr> comps;
    try {
      for (const auto& e : ex) comps.push_back(parse_expression(e.get<std::string>(), total, inputs));
    } catch (const json::exception&) {
      throw ConfigError(where + " expressions must be strings");
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (static_cast<int>(comps.size()) != dim) throw ConfigError(where + " needs one expression per state");
    std::optional<double> self_rate;
    if (s.contains("self_rate")) self_rate = require<double>(s, "self_rate", where);
    std::optional<std::vector<double>> cross;
    if (s.contains("cross_gains")) {
      const Eigen::VectorXd g = to_vector(s["cross_gains"], where + " cross_gains");
      cross = std::vector<double>(g.data(), g.data() + g.size());
    }
    const NormSpec spec = resolve_norm(s, dim);
    const PairingKind kind = resolve_pairing(s, spec);
    out.push_back(SubsystemSpec{name, dim, inputs, std::move(comps), self_rate, cross, spec, kind});
  }
  return out;
}

CommandResult cmd_interconnect(json& cfg, const RunOptions& run) {
  check_keys(cfg, "config", {"schema_version", "network", "region", "sampling"});
  json& nj = section(cfg, "network");
  check_keys(nj, "network", {"subsystems", "epsilon", "simulate"});
  int total = 0;
  const std::vector<SubsystemSpec> subs = resolve_subsystems(nj, total);
  const double epsilon = take<double>(nj, "epsilon", 0.0);
  std::optional<Region> region;
  if (cfg.contains("region")) region = resolve_region(cfg, total);
  const SamplingOptions opts = resolve_sampling(cfg, run);
  NetworkCertificate cert = [&] {
    try {
      return certify_network(subs, epsilon, region, opts);
    } catch (const NoGuaranteeError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("network: ") + e.what());
    }
  }();
  json result{{"gamma", from_matrix(cert.gain.gamma)},
              {"alpha", cert.gain.alpha},
              {"irreducible", cert.gain.irreducible},
              {"certified", cert.certified},
              {"estimated", cert.estimated}};
  int code = cert.certified ? success : negative;
  if (cert.certified) {
    result["rate"] = cert.rate;
    result["epsilon"] = cert.epsilon;
    result["xi"] = from_vector(cert.weights->xi);
    result["lmi_max_eig"] = cert.weights->lmi_max_eig;
    if (region) {
      const Geometry g = cert.geometry();
      const auto dirs = sample_unit_sphere(NormSpec::unweighted(2.0, total), 64, opts.seed + 1);
      const auto pairs = generate_osl_pairs(cert.network, g, *region, opts, {}, dirs);
      result["network_osl"] = osl_over_pairs(cert.network, g, pairs, opts.threads).value;
    }
    if (nj.contains("simulate")) {
      json& sj = section(nj, "simulate");
      check_keys(sj, "network.simulate", {"pairs", "T", "h", "slack", "half_width"});
      const int pairs = take<int>(sj, "pairs", 10);
      const double T = take<double>(sj, "T", 10.0);
      const double h = take<double>(sj, "h", 1e-3);
      const double slack = take<double>(sj, "slack", 0.01);
      const double w = take<double>(sj, "half_width", 1.0);
      if (pairs < 1 || !(h > 0.0) || !(T >= h)) throw ConfigError("network.simulate has invalid settings");
      std::mt19937_64 rng(opts.seed);
      std::uniform_real_distribution<double> unit(-w, w);
      const Distance dist = cert.distance();
      double worst = -std::numeric_limits<double>::infinity();
      bool pass = true;
      for (int p = 0; p < pairs; ++p) {
        Eigen::VectorXd a(total);
        Eigen::VectorXd b(total);
        for (int i = 0; i < total; ++i) a(i) = unit(rng);
        for (int i = 0; i < total; ++i) b(i) = unit(rng);
        const Trajectory ta = integrate(cert.network, 0.0, a, T, h);
        const Trajectory tb = integrate(cert.network, 0.0, b, T, h);
        if (ta.blowup_time || tb.blowup_time) {
          pass = false;
          continue;
        }
        const EnvelopeReport r = envelope_check(ta, tb, dist, -cert.rate + slack, 1e-4 * (1.0 + dist(a - b)));
        worst = std::max(worst, r.max_violation);
        pass = pass && r.pass;
      }
      result["simulation"] = json{{"b", -cert.rate + slack}, {"max_violation", worst}, {"pass", pass}};
      if (!pass) code = negative;
    }
  }
  return {json{{"result", result}}, code};
}

}  // namespace

CommandResult run_command(const std::string& command, json& config, const RunOptions& options) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  if (!config.contains("schema_version")) config["schema_version"] = kSchemaVersion;
  if (!config["schema_version"].is_number_integer() || config["schema_version"].get<int>() != kSchemaVersion) {
    throw ConfigError("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  CommandResult r;
  if (command == "measure") {
    r = cmd_measure(config, options);
  } else if (command == "certify") {
    r = cmd_certify(config, options);
  } else if (command == "simulate") {
    r = cmd_simulate(config, options);
  } else if (command == "interconnect") {
    r = cmd_interconnect(config, options);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  const std::string canonical = config.dump();
  json report{{"schema_version", kSchemaVersion},
              {"command", command},
              {"config", config},
              {"config_hash", fnv1a_hex(canonical)},
              {"seed", config.contains("sampling") ? config["sampling"].value("seed", 0ULL) : 0ULL},
              {"exit_code", r.exit_code}};
  report["result"] = r.report["result"];
  r.report = std::move(report);
  write_file(options, "report.json", r.report.dump(2) + "\n");
  return r;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contraction analysis for nonlinear systems in non-Euclidean norms"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  RunOptions run;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON analysis config")->required();
  app.add_option("--out", run.out_dir, "directory for report.json and trajectory CSVs");
  app.add_option("--seed", seed, "override sampling.seed");
  app.add_option("--threads", run.threads, "worker threads for sampling")->check(CLI::PositiveNumber);
  for (const char* name : {"measure", "certify", "simulate", "interconnect"}) app.add_subcommand(name);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return success;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return config_error;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot read config '" + config_path + "'");
    json config;
    try {
      config = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (seed && config.is_object()) section(config, "sampling")["seed"] = *seed;
    const CommandResult r = run_command(command, config, run);
    out << r.report.dump(2) << "\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const NoGuaranteeError& e) {
    err << "no guarantee: " << e.what() << "\n";
    return negative;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return negative;
  } catch (const KernelInvarianceError& e) {
    err << "hypothesis violated: " << e.what() << "\n";
    return negative;
  } catch (const HypothesisError& e) {
    err << "hypothesis violated: " << e.what() << "\n";
    return negative;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return numerical_error;
  }
}

}  // namespace contraction::cli
