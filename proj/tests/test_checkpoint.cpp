#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>

#include "doctest.h"
#include "gridwm/checkpoint.hpp"

using namespace gridwm;

namespace {
std::string tmp_path(const char* name) {
  return std::string("/tmp/gridwm_test_") + name + ".ck";
}
}  // namespace

TEST_CASE("round trip preserves values, moments, and metadata exactly") {
  SeededRng rng(5);
  ParameterSet ps("wm");
  Linear fc(ps, "fc", 4, 3, rng);
  Adam opt(1e-3, 0.9, 0.999, 1e-8, 100.0);
  sum_all(square_t(fc(Tensor::uniform({2, 4}, -1, 1, rng)))).backward();
  opt.step(ps);

  Checkpoint ck;
  ck.step_count = 1234;
  ck.config_hash = "deadbeef";
  ck.stage = "pretrain";
  ck.store_set(ps);
  ck.store_adam("wm", opt);
  ck.extras["normalizer/mu"] = 0.25;
  const std::string path = tmp_path("roundtrip");
  ck.save(path);

  Checkpoint lk = Checkpoint::load(path);
  CHECK(lk.step_count == 1234);
  CHECK(lk.config_hash == "deadbeef");
  CHECK(lk.stage == "pretrain");
  CHECK(lk.extras.at("normalizer/mu") == 0.25);

  ParameterSet ps2("wm");
  SeededRng rng2(999);
  Linear fc2(ps2, "fc", 4, 3, rng2);
  lk.load_into(ps2);
  CHECK(ps2.checksum() == ps.checksum());

  Adam opt2(1e-3, 0.9, 0.999, 1e-8, 100.0);
  lk.load_adam("wm", opt2);
  CHECK(opt2.step_count() == opt.step_count());
  CHECK(opt2.state().at("wm/fc/w").m == opt.state().at("wm/fc/w").m);
  std::remove(path.c_str());
}

TEST_CASE("f32 precision round trips through float quantization") {
  SeededRng rng(6);
  ParameterSet ps("p");
  ps.add("x", Tensor::uniform({5}, -1, 1, rng));
  Checkpoint ck;
  ck.precision = "f32";
  ck.store_set(ps);
  const std::string path = tmp_path("f32");
  ck.save(path);
  Checkpoint lk = Checkpoint::load(path);
  for (int i = 0; i < 5; ++i)
    CHECK(lk.sets.at("p").tensors.at("x").data[i] ==
          static_cast<double>(static_cast<float>(ps.at("x").data()[i])));
  std::remove(path.c_str());
}

TEST_CASE("shape mismatch and missing entries are errors") {
  ParameterSet ps("p");
  ps.add("x", Tensor::zeros({3}));
  Checkpoint ck;
  ck.store_set(ps);

  ParameterSet wrong("p");
  wrong.add("x", Tensor::zeros({4}));
  CHECK_THROWS_AS(ck.load_into(wrong), IoError);

  ParameterSet other("q");
  other.add("x", Tensor::zeros({3}));
  CHECK_THROWS_AS(ck.load_into(other), IoError);

  CHECK_THROWS_AS(Checkpoint::load("/nonexistent/path.ck"), IoError);
}
