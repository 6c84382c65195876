#include <cstring>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "cognate/checkpoint.hpp"
#include "cognate/diagnostics.hpp"
#include "model_props.hpp"

using namespace cognate;
using testing_support::toy_config;

namespace {

Checkpoint sample() {
  Checkpoint c;
  c.config = toy_config();
  c.params = ParameterStore::initialize(c.config, 11);
  round_to_float32(c.params);
  c.threshold = 0.55;
  c.vocabulary = Vocabulary::build({parse_word("p a t")}, {"x", "y"});
  c.info["note"] = "unit";
  return c;
}

std::string serialize(const Checkpoint& c) {
  std::ostringstream out;
  write_checkpoint(out, c);
  return out.str();
}

void expect_rejected(const std::string& bytes, const char* what) {
  std::istringstream in(bytes);
  EXPECT_THROW(read_checkpoint(in), DataError) << what;
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const Checkpoint c = sample();
  std::istringstream in(serialize(c));
  const Checkpoint back = read_checkpoint(in);
  EXPECT_EQ(back.config, c.config);
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.threshold, c.threshold);
  ASSERT_TRUE(back.vocabulary.has_value());
  EXPECT_EQ(*back.vocabulary, *c.vocabulary);
  EXPECT_EQ(back.info["note"], "unit");
  EXPECT_EQ(serialize(back), serialize(c));
}

TEST(Checkpoint, FileRoundTripAndParamsWrapper) {
  const Checkpoint c = sample();
  const auto dir = std::filesystem::temp_directory_path();
  save_checkpoint(c, dir / "cognate_unit.ckpt");
  EXPECT_EQ(load_checkpoint(dir / "cognate_unit.ckpt").params, c.params);
  save_params(c.params, c.config, dir / "cognate_unit.params");
  EXPECT_EQ(load_params(dir / "cognate_unit.params", c.config), c.params);
  ModelConfig other = c.config;
  other.hidden_size = 16;
  other.intermediate_size = 16;
  EXPECT_THROW(load_params(dir / "cognate_unit.params", other), DataError);
  EXPECT_THROW(load_checkpoint(dir / "does_not_exist.ckpt"), DataError);
  std::filesystem::remove(dir / "cognate_unit.ckpt");
  std::filesystem::remove(dir / "cognate_unit.params");
}

TEST(Checkpoint, CorruptionIsDetected) {
  const std::string good = serialize(sample());
  expect_rejected("", "empty");
  expect_rejected("NOTACKPT 1\n" + good.substr(good.find('\n') + 1), "magic");
  expect_rejected("COGCKPT 9\n" + good.substr(good.find('\n') + 1), "version");
  expect_rejected(good.substr(0, good.size() - 3), "truncated payload");
  expect_rejected(good + "x", "trailing bytes");

  // A header whose tensor list disagrees with its config.
  const std::size_t first = good.find('\n'), second = good.find('\n', first + 1);
  const std::size_t header_len = std::stoul(good.substr(first + 1, second - first - 1));
  std::string header = good.substr(second + 1, header_len);
  const auto pos = header.find("embed.token");
  ASSERT_NE(pos, std::string::npos);
  header.replace(pos, std::strlen("embed.token"), "embed.tokex");
  expect_rejected(good.substr(0, second + 1) + header + good.substr(second + 1 + header_len), "renamed tensor");

  // A NaN in the payload.
  std::string nan = good;
  const float bad = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - sizeof(float), &bad, sizeof(float));
  expect_rejected(nan, "nan");
}

TEST(Checkpoint, Float32RoundingIsIdempotent) {
  ParameterStore p;
  p.add("w", {3}, {0.1, 1.0 / 3.0, -2.5});
  round_to_float32(p);
  const auto once = p;
  round_to_float32(p);
  EXPECT_EQ(p, once);
  EXPECT_EQ(p.at("w").data[0], static_cast<double>(0.1f));
}
