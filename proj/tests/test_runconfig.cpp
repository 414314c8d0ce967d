#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <string>

#include "doctest.h"
#include "gdpw/runconfig.hpp"

using namespace gdpw;
using runconfig::Config;

TEST_CASE("parse accepts comments, blanks and surrounding whitespace") {
    const std::string text =
        "# training run\n"
        "\n"
        "hidden_dim = 64\n"
        "  learning_rate=0.0002  \n"
        "variant=full   # trailing comment\n";
    Config c = Config::parse(text);
    CHECK(c.get_int("hidden_dim") == 64);
    CHECK(c.get_real("learning_rate") == doctest::Approx(2e-4));
    CHECK(c.get("variant") == "full");
    CHECK(c.entries().size() == 3);
}

TEST_CASE("parse rejects malformed lines") {
    CHECK_THROWS_AS(Config::parse("novalue\n"), UsageError);
    CHECK_THROWS_AS(Config::parse("=5\n"), UsageError);
    CHECK_THROWS_AS(Config::parse("a=1\na=2\n"), UsageError);
}

TEST_CASE("serialize round-trips and keeps insertion order") {
    Config c;
    c.set("zeta", "1");
    c.set_int("alpha", -7);
    c.set_real("mid", 0.25);
    c.set_bool("flag", true);
    const std::string text = c.serialize();
    Config back = Config::parse(text);
    REQUIRE(back.entries().size() == 4);
    CHECK(back.entries()[0].first == "zeta");
    CHECK(back.entries()[1].first == "alpha");
    CHECK(back.get_int("alpha") == -7);
    CHECK(back.get_real("mid") == 0.25);
    CHECK(back.get_bool("flag"));
    CHECK(back.serialize() == text);
}

TEST_CASE("set overwrites in place") {
    Config c;
    c.set("k", "1");
    c.set("other", "x");
    c.set("k", "2");
    CHECK(c.entries().size() == 2);
    CHECK(c.get("k") == "2");
    CHECK(c.entries()[0].first == "k");
}

TEST_CASE("typed getters reject junk") {
    Config c;
    c.set("n", "12x");
    c.set("r", "1.5.2");
    c.set("b", "yes");
    CHECK_THROWS_AS(c.get_int("n"), UsageError);
    CHECK_THROWS_AS(c.get_real("r"), UsageError);
    CHECK_THROWS_AS(c.get_bool("b"), UsageError);
    CHECK_THROWS_AS(c.get("missing"), UsageError);
    CHECK(c.get_or("missing", "dflt") == "dflt");
}

TEST_CASE("check_keys flags typos") {
    Config c;
    c.set("hidden_dim", "64");
    c.set("hiden_dim", "64");
    CHECK_THROWS_AS(c.check_keys(runconfig::model_config_keys()), UsageError);
    Config ok;
    ok.set("hidden_dim", "64");
    ok.set("variant", "no_tm");
    CHECK_NOTHROW(ok.check_keys(runconfig::model_config_keys()));
}

TEST_CASE("model config round-trips through the flat format") {
    model::ModelConfig mc;
    mc.hidden_dim = 48;
    mc.gcn_layers = 3;
    mc.projection_dim = 16;
    mc.learning_rate = 5e-4;
    mc.sigma_km = 2.0;
    mc.delta_d_km = 7.5;
    mc.gravity_denominator = graphs::GravityDenominator::DistanceSquared;
    mc.loss_weight_time = 0.5;
    mc.seed = 123;

    Config c = runconfig::from_model_config(mc, model::Variant::kNoTm);
    CHECK_NOTHROW(c.check_keys(runconfig::model_config_keys()));
    CHECK(runconfig::variant_of(c) == model::Variant::kNoTm);

    model::ModelConfig back = runconfig::to_model_config(c);
    CHECK(back.hidden_dim == mc.hidden_dim);
    CHECK(back.gcn_layers == mc.gcn_layers);
    CHECK(back.projection_dim == mc.projection_dim);
    CHECK(back.learning_rate == mc.learning_rate);
    CHECK(back.sigma_km == mc.sigma_km);
    CHECK(back.delta_d_km == mc.delta_d_km);
    CHECK(back.gravity_denominator == mc.gravity_denominator);
    CHECK(back.loss_weight_time == mc.loss_weight_time);
    CHECK(back.seed == mc.seed);
}

TEST_CASE("variant defaults to full when unset") {
    Config c;
    CHECK(runconfig::variant_of(c) == model::Variant::kFull);
    c.set("variant", "no_dm");
    CHECK(runconfig::variant_of(c) == model::Variant::kNoDm);
}

TEST_CASE("partial configs keep defaults for unset keys") {
    Config c;
    c.set("hidden_dim", "32");
    model::ModelConfig mc = runconfig::to_model_config(c);
    CHECK(mc.hidden_dim == 32);
    CHECK(mc.gcn_layers == 2);
    CHECK(mc.learning_rate == 2e-4);
}

TEST_CASE("fingerprint tracks content not formatting") {
    Config a = Config::parse("hidden_dim=64\nseed=7\n");
    Config b = Config::parse("# comment\nhidden_dim = 64\n\nseed=7\n");
    CHECK(runconfig::fingerprint(a) == runconfig::fingerprint(b));

    Config c = Config::parse("hidden_dim=64\nseed=8\n");
    CHECK(runconfig::fingerprint(a) != runconfig::fingerprint(c));
    // Key order is part of the serialized form, so it is part of the identity.
    Config d = Config::parse("seed=7\nhidden_dim=64\n");
    CHECK(runconfig::fingerprint(a) != runconfig::fingerprint(d));
}

TEST_CASE("save and load preserve content") {
    Config c;
    c.set("hidden_dim", "64");
    c.set("variant", "no_ug_graph");
    const std::string path = "runconfig_test.txt";
    c.save(path);
    Config back = Config::load(path);
    CHECK(back.serialize() == c.serialize());
    std::remove(path.c_str());
    CHECK_THROWS_AS(Config::load("does_not_exist.cfg"), UsageError);
}
