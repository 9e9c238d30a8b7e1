#include "gridwm/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace gridwm {

namespace {

constexpr uint32_t kMagic = 0x47574b43;  // "GWKC"
constexpr uint32_t kVersion = 1;

void w_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void w_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void w_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void w_str(std::ostream& os, const std::string& s) {
  w_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void w_f64_vec(std::ostream& os, const std::vector<double>& v, bool as_f32) {
  w_u64(os, v.size());
  if (as_f32) {
    for (double d : v) {
      const float f = static_cast<float>(d);
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
  } else {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
  }
}

uint32_t r_u32(std::istream& is) {
  uint32_t v;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t r_u64(std::istream& is) {
  uint64_t v;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double r_f64(std::istream& is) {
  double v;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::string r_str(std::istream& is) {
  const uint32_t n = r_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}
std::vector<double> r_f64_vec(std::istream& is, bool as_f32) {
  const uint64_t n = r_u64(is);
  std::vector<double> v(n);
  if (as_f32) {
    for (uint64_t i = 0; i < n; ++i) {
      float f;
      is.read(reinterpret_cast<char*>(&f), 4);
      v[i] = static_cast<double>(f);
    }
  } else {
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
  }
  return v;
}

}  // namespace

void Checkpoint::store_set(const ParameterSet& ps) {
  SetBlob blob;
  blob.frozen = ps.frozen();
  for (const auto& [k, t] : ps.all()) blob.tensors[k] = {t.shape(), t.data()};
  sets[ps.name()] = std::move(blob);
}

void Checkpoint::load_into(ParameterSet& ps) const {
  auto it = sets.find(ps.name());
  if (it == sets.end()) throw IoError("checkpoint has no parameter set '" + ps.name() + "'");
  for (auto& [k, t] : ps.all()) {
    auto jt = it->second.tensors.find(k);
    if (jt == it->second.tensors.end())
      throw IoError("checkpoint set '" + ps.name() + "' missing tensor '" + k + "'");
    if (jt->second.shape != t.shape())
      throw IoError("checkpoint tensor shape mismatch for '" + ps.name() + "/" + k + "'");
    t.data() = jt->second.data;
  }
}

void Checkpoint::store_adam(const std::string& name, Adam& opt) {
  AdamBlob blob;
  blob.step_count = opt.step_count();
  blob.moments = opt.state();
  optimizers[name] = std::move(blob);
}

void Checkpoint::load_adam(const std::string& name, Adam& opt) const {
  auto it = optimizers.find(name);
  if (it == optimizers.end()) throw IoError("checkpoint has no optimizer '" + name + "'");
  opt.set_step_count(it->second.step_count);
  opt.state() = it->second.moments;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint: " + path);
  const bool f32 = precision == "f32";
  w_u32(os, kMagic);
  w_u32(os, kVersion);
  w_u64(os, step_count);
  w_str(os, config_hash);
  w_str(os, stage);
  w_str(os, precision);
  w_u32(os, static_cast<uint32_t>(sets.size()));
  for (const auto& [name, blob] : sets) {
    w_str(os, name);
    w_u32(os, blob.frozen ? 1 : 0);
    w_u32(os, static_cast<uint32_t>(blob.tensors.size()));
    for (const auto& [path_, t] : blob.tensors) {
      w_str(os, path_);
      w_u32(os, static_cast<uint32_t>(t.shape.size()));
      for (int d : t.shape) w_u32(os, static_cast<uint32_t>(d));
      w_f64_vec(os, t.data, f32);
    }
  }
  w_u32(os, static_cast<uint32_t>(optimizers.size()));
  for (const auto& [name, blob] : optimizers) {
    w_str(os, name);
    w_u64(os, static_cast<uint64_t>(blob.step_count));
    w_u32(os, static_cast<uint32_t>(blob.moments.size()));
    for (const auto& [k, m] : blob.moments) {
      w_str(os, k);
      w_f64_vec(os, m.m, f32);
      w_f64_vec(os, m.v, f32);
    }
  }
  w_u32(os, static_cast<uint32_t>(extras.size()));
  for (const auto& [k, v] : extras) {
    w_str(os, k);
    w_f64(os, v);
  }
  if (!os) throw IoError("short write on checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint: " + path);
  if (r_u32(is) != kMagic) throw IoError("bad checkpoint magic: " + path);
  const uint32_t ver = r_u32(is);
  if (ver != kVersion) throw IoError("unsupported checkpoint version");
  Checkpoint ck;
  ck.step_count = r_u64(is);
  ck.config_hash = r_str(is);
  ck.stage = r_str(is);
  ck.precision = r_str(is);
  const bool f32 = ck.precision == "f32";
  const uint32_t nsets = r_u32(is);
  for (uint32_t i = 0; i < nsets; ++i) {
    const std::string name = r_str(is);
    SetBlob blob;
    blob.frozen = r_u32(is) != 0;
    const uint32_t nt = r_u32(is);
    for (uint32_t j = 0; j < nt; ++j) {
      const std::string p = r_str(is);
      const uint32_t nd = r_u32(is);
      Shape s(nd);
      for (uint32_t d = 0; d < nd; ++d) s[d] = static_cast<int>(r_u32(is));
      TensorBlob t{std::move(s), r_f64_vec(is, f32)};
      blob.tensors.emplace(p, std::move(t));
    }
    ck.sets.emplace(name, std::move(blob));
  }
  const uint32_t nopt = r_u32(is);
  for (uint32_t i = 0; i < nopt; ++i) {
    const std::string name = r_str(is);
    AdamBlob blob;
    blob.step_count = static_cast<int64_t>(r_u64(is));
    const uint32_t nm = r_u32(is);
    for (uint32_t j = 0; j < nm; ++j) {
      const std::string k = r_str(is);
      Adam::Moments m;
      m.m = r_f64_vec(is, f32);
      m.v = r_f64_vec(is, f32);
      blob.moments.emplace(k, std::move(m));
    }
    ck.optimizers.emplace(name, std::move(blob));
  }
  const uint32_t nex = r_u32(is);
  for (uint32_t i = 0; i < nex; ++i) {
    const std::string k = r_str(is);
    ck.extras[k] = r_f64(is);
  }
  if (!is) throw IoError("truncated checkpoint: " + path);
  return ck;
}

}  // namespace gridwm
