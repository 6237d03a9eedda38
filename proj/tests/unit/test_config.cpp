#include "muse/config.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

using namespace muse;

namespace {

std::string config_path(const char* name) { return std::string(MUSE_CONFIG_DIR) + "/" + name; }

Json gaussian(std::size_t T) { return Json{{"process", {{"kind", "gaussian-iid"}, {"horizon", T}}}}; }

} // namespace

TEST(Config, ShippedFilesLoad) {
    for (const char* name : {"discrete_t2.json", "discrete_t3_walk.json", "discrete_t3_skewed.json", "chain_5_1.json",
                             "chain_1_5.json", "continue_fixture.json", "bermudan_d5.json", "gaussian_t3.json"})
        EXPECT_NO_THROW(experiment_from_json(load_json_file(config_path(name)))) << name;
}

TEST(Config, BermudanFile) {
    const auto c = experiment_from_json(load_json_file(config_path("bermudan_d5.json")));
    EXPECT_EQ(c.process.kind(), ProcessKind::Gbm);
    EXPECT_EQ(c.process.dimension(), 5u);
    EXPECT_EQ(c.process.horizon(), 4u);
    EXPECT_EQ(c.reward.kind(), RewardKind::BasketPut);
    EXPECT_EQ(c.schedule.rates(), (std::vector<double>{0.6, 0.6, 0.6}));
    EXPECT_EQ(c.replicates, 500000u);
    EXPECT_EQ(c.seed, 2024u);
}

TEST(Config, GbmDefaultsToAtTheMoneyPut) {
    const auto c = experiment_from_json(Json{{"process", {{"kind", "GBM"}, {"dimension", 3}}}});
    ASSERT_EQ(c.reward.kind(), RewardKind::BasketPut);
    const auto& put = std::get<BasketPut>(c.reward.variant());
    EXPECT_EQ(put.strike(), 100.0);
    EXPECT_EQ(put.discount(), 0.05);
    EXPECT_EQ(put.times().size(), 4u);
}

TEST(Config, RateForms) {
    Json j = gaussian(4);
    EXPECT_EQ(experiment_from_json(j).schedule.rates(), (std::vector<double>{0.6, 0.6, 0.6}));
    j["rates"] = 0.7;
    EXPECT_EQ(experiment_from_json(j).schedule.rates(), (std::vector<double>{0.7, 0.7, 0.7}));
    j["rates"] = {0.65};
    EXPECT_EQ(experiment_from_json(j).schedule.rates(), (std::vector<double>{0.65, 0.65, 0.65}));
    j["rates"] = {0.6, 0.7, 0.8};
    EXPECT_EQ(experiment_from_json(j).schedule.rates(), (std::vector<double>{0.6, 0.7, 0.8}));
    j["rates"] = {0.6, 0.7};
    EXPECT_THROW(experiment_from_json(j), ConfigError);
    j.erase("rates");
    j["theoretical_delta"] = 0.1;
    const auto c = experiment_from_json(j);
    EXPECT_EQ(c.schedule.source(), RateSchedule::Source::Theoretical);
    EXPECT_EQ(c.schedule.at_stage(3), theoretical_rate(0.1));
    j["rates"] = 0.6;
    EXPECT_THROW(experiment_from_json(j), ConfigError);
}

TEST(Config, RejectsInconsistentOrUnknown) {
    EXPECT_THROW(experiment_from_json(Json{{"process", {{"kind", "levy"}, {"horizon", 2}}}}), ConfigError);
    EXPECT_THROW(experiment_from_json(Json{{"process", {{"kind", "gaussian-iid"}}}}), ConfigError);
    EXPECT_THROW(experiment_from_json(Json{{"process", {{"kind", "gbm"}, {"horizon", 3}}}}), ConfigError);
    Json put = gaussian(2);
    put["reward"] = {{"kind", "basket-put"}, {"strike", 1.0}, {"times", {0.0, 1.0, 2.0}}};
    EXPECT_THROW(experiment_from_json(put), ConfigError);
    Json bad_ci = gaussian(2);
    bad_ci["ci_method"] = "jackknife";
    EXPECT_THROW(experiment_from_json(bad_ci), ConfigError);
    Json bad_type = gaussian(2);
    bad_type["replicates"] = "many";
    EXPECT_THROW(experiment_from_json(bad_type), ConfigError);
    EXPECT_THROW(experiment_from_json(Json::array()), ConfigError);
}

TEST(Config, OptionalFields) {
    Json j = gaussian(3);
    j["truncate"] = 5;
    j["ci_method"] = "bootstrap";
    j["bootstrap"] = 400;
    j["alpha"] = 0.1;
    j["workers"] = 3;
    const auto c = experiment_from_json(j);
    EXPECT_TRUE(c.level_policy.biased());
    EXPECT_EQ(c.level_policy.max_level(), 5u);
    EXPECT_EQ(c.ci_method, CiMethod::BootstrapPercentile);
    EXPECT_EQ(c.bootstrap, 400u);
    EXPECT_EQ(c.alpha, 0.1);
    EXPECT_EQ(c.workers, 3u);
}

TEST(Config, FileErrors) {
    EXPECT_THROW(load_json_file(config_path("does_not_exist.json")), ConfigError);
    const std::string path = ::testing::TempDir() + "muse_bad_config.json";
    std::ofstream(path) << "{ \"process\": ";
    EXPECT_THROW(load_json_file(path), ConfigError);
    std::remove(path.c_str());
}
