#include "doctest.h"
#include "m3hl/config.hpp"

using namespace m3hl;

TEST_CASE("defaults mirror the desk-scale configuration") {
  const TrainConfig c;
  CHECK(c.lr == 1e-3);
  CHECK(c.weight_decay == 1e-4);
  CHECK(c.lambda_hl == 0.5);
  CHECK(c.alpha == 0.5);
  CHECK(c.mask_ratio == 0.5);
  CHECK(c.patch_size == Shape{16, 16});
  CHECK(c.iterations == 2000);
  CHECK(c.batch_labeled == 8);
  CHECK(c.batch_unlabeled == 8);
  CHECK(c.image_size == 64);
  CHECK(c.n_labeled == 8);
  CHECK(c.n_unlabeled == 72);
  CHECK(c.n_val == 20);
  CHECK(c.enable_mix);
  CHECK(c.enable_hl);
  CHECK_FALSE(c.enable_sup);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("every key round-trips through text") {
  TrainConfig c;
  c.lr = 0.0123456789012345;
  c.patch_size = {8, 4};
  c.enable_sup = true;
  c.seed = 18446744073709551615ULL;
  TrainConfig d;
  apply_settings(d, to_settings(c));
  for (const auto& k : config_keys()) CHECK(get_setting(d, k) == get_setting(c, k));
  CHECK(d.lr == c.lr);
  CHECK(format_config(d) == format_config(c));
}

TEST_CASE("setting parsing accepts documented forms and rejects the rest") {
  TrainConfig c;
  apply_setting(c, "patch_size", "32");
  CHECK(c.patch_size == Shape{32, 32});
  apply_setting(c, "patch_size", "8x16");
  CHECK(c.patch_size == Shape{8, 16});
  apply_setting(c, "enable_hl", "off");
  CHECK_FALSE(c.enable_hl);
  apply_setting(c, "enable_hl", "yes");
  CHECK(c.enable_hl);
  CHECK_THROWS_AS(apply_setting(c, "nonsense", "1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "lr", "fast"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "iterations", "-3"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "enable_mix", "maybe"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "patch_size", "8x"), ConfigError);
}

TEST_CASE("validate rejects inconsistent settings") {
  const auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.batch_labeled = 3; c.batch_unlabeled = 3; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.batch_unlabeled = 4; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.mask_ratio = 1.2; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.ema_decay = 1.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.patch_size = {24, 24}; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.image_size = 40; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.enable_mix = c.enable_hl = c.enable_sup = false; }).validate(),
                  ConfigError);
}
