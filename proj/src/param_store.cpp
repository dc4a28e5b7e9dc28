#include "tcda/param_store.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace tcda {

ParamStore::ParamStore(uint64_t seed) : init_rng_(seed) {}

Tensor ParamStore::create(const std::string& name, const Shape& shape,
                          Init init) {
  if (index_.count(name))
    throw ConfigError("parameter already registered: " + name);
  std::vector<double> v(size_t(shape_size(shape)), 0.0);
  if (init == Init::Ones) {
    for (auto& x : v) x = 1.0;
  } else if (init == Init::Xavier) {
    // uniform(-a, a), a = sqrt(6 / (fan_in + fan_out))
    const int fan_in = shape.size() >= 1 ? shape[0] : 1;
    const int fan_out = shape.size() >= 2 ? shape[1] : 1;
    const double a = std::sqrt(6.0 / double(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (auto& x : v) x = u(init_rng_);
  }
  Tensor t = Tensor::from_data(shape, std::move(v), /*requires_grad=*/true);
  index_[name] = names_.size();
  names_.push_back(name);
  params_.push_back(t);
  m_.emplace_back(t.numel(), 0.0);
  v_.emplace_back(t.numel(), 0.0);
  return t;
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return params_[it->second];
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p.zero_grad();
}

void ParamStore::adamw_step(
    const std::function<double(const std::string&)>& lr_for,
    const AdamConfig& cfg) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(step_));
  for (size_t i = 0; i < params_.size(); ++i) {
    const double lr = lr_for(names_[i]);
    auto& theta = params_[i].mutable_data();
    const auto& g = params_[i].grad();
    if (g.size() != theta.size())
      throw StructureError("adamw_step: missing gradient for " + names_[i]);
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < theta.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      theta[j] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) +
                        cfg.weight_decay * theta[j]);
    }
  }
}

std::string ParamStore::serialize(
    const std::map<std::string, std::string>& meta) const {
  std::ostringstream os;
  os << "TCDA_CKPT 1\n";
  nlohmann::json jm(meta);
  os << "meta " << jm.dump() << "\n";
  os << "step " << step_ << "\n";
  std::ostringstream rs;
  rs << init_rng_;
  os << "rng " << rs.str() << "\n";
  for (size_t i = 0; i < params_.size(); ++i) {
    os << "param " << names_[i] << " " << params_[i].ndim();
    for (int k = 0; k < params_[i].ndim(); ++k) os << " " << params_[i].dim(k);
    os << "\n";
    auto dump_line = [&os](const std::vector<double>& v) {
      for (size_t j = 0; j < v.size(); ++j)
        os << (j ? " " : "") << double_to_text(v[j]);
      os << "\n";
    };
    dump_line(params_[i].data());
    dump_line(m_[i]);
    dump_line(v_[i]);
  }
  return os.str();
}

ParamStore ParamStore::deserialize(const std::string& text,
                                   std::map<std::string, std::string>* meta_out) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "TCDA_CKPT 1")
    throw ParseError("checkpoint: bad magic line");

  ParamStore ps(0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string rest = line.substr(5);
      auto j = nlohmann::json::parse(rest);
      if (meta_out)
        for (auto& [k, v] : j.items()) (*meta_out)[k] = v.get<std::string>();
    } else if (tag == "step") {
      ls >> ps.step_;
    } else if (tag == "rng") {
      std::string rest = line.substr(4);
      std::istringstream rs(rest);
      rs >> ps.init_rng_;
    } else if (tag == "param") {
      std::string name;
      int nd = 0;
      ls >> name >> nd;
      Shape shape(static_cast<size_t>(nd), 0);
      for (int k = 0; k < nd; ++k) ls >> shape[size_t(k)];
      const int64_t n = shape_size(shape);
      auto read_line = [&is, n, &name]() {
        std::string vl;
        if (!std::getline(is, vl))
          throw ParseError("checkpoint: truncated values for " + name);
        std::istringstream vs(vl);
        std::vector<double> out;
        out.reserve(size_t(n));
        std::string tok;
        while (vs >> tok) out.push_back(text_to_double(tok));
        if (int64_t(out.size()) != n)
          throw ParseError("checkpoint: value count mismatch for " + name);
        return out;
      };
      std::vector<double> val = read_line();
      std::vector<double> m = read_line();
      std::vector<double> v = read_line();
      Tensor t = Tensor::from_data(shape, std::move(val), true);
      ps.index_[name] = ps.names_.size();
      ps.names_.push_back(name);
      ps.params_.push_back(t);
      ps.m_.push_back(std::move(m));
      ps.v_.push_back(std::move(v));
    } else {
      throw ParseError("checkpoint: unknown record '" + tag + "'");
    }
  }
  return ps;
}

void ParamStore::save(const std::string& path,
                      const std::map<std::string, std::string>& meta) const {
  write_text_file(path, serialize(meta));
}

ParamStore ParamStore::load(const std::string& path,
                            std::map<std::string, std::string>* meta_out) {
  return deserialize(read_text_file(path), meta_out);
}

}  // namespace tcda
