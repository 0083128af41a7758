#include <array>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wnduma/classifier.hpp"

using namespace wnduma;
using test::make_input;

namespace {

ModelConfig tiny_config() {
    ModelConfig c = ModelConfig::desk(30, 16);
    c.encoder.d_model = 8;
    c.encoder.n_heads = 2;
    c.encoder.d_ff = 12;
    c.coattention.heads = 2;
    c.coattention.d_k = 3;
    c.coattention.d_v = 3;
    return c;
}

data::EncodedInstance instance_from(const std::array<std::vector<Index>, 5>& options, int pad = 2) {
    data::EncodedInstance inst;
    inst.id = "x";
    for (std::size_t k = 0; k < 5; ++k) inst.options[k] = make_input({4, 5, 6, 7}, options[k], pad);
    inst.label = 0;
    return inst;
}

}  // namespace

TEST(PoolAndMerge, ConstantRowsGiveTheirValues) {
    DTape tape;
    Representations r;
    r.rep1 = tape.constant(Mat::Constant(3, 2, 1.5));
    Mat p(4, 2);
    p << 1, 2, 3, 4, 5, 6, 100, 100;
    r.rep2 = tape.constant(p);
    RowMask m2 = RowMask::Constant(4, true);
    m2(3) = false;
    const Mat merged = pool_and_merge(r, RowMask::Constant(3, true), m2).value();
    ASSERT_EQ(merged.rows(), 1);
    ASSERT_EQ(merged.cols(), 4);
    EXPECT_DOUBLE_EQ(merged(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(merged(0, 1), 1.5);
    EXPECT_DOUBLE_EQ(merged(0, 2), 3.0);
    EXPECT_DOUBLE_EQ(merged(0, 3), 4.0);
}

TEST(ScoreOption, BasisAndLinearity) {
    DTape tape;
    Mat w(4, 1);
    w << 0.5, -2.0, 3.0, 0.25;
    const Tensor wt = tape.constant(w), b = tape.constant(Mat::Constant(1, 1, 0.125));
    for (Index i = 0; i < 4; ++i) {
        Mat e = Mat::Zero(1, 4);
        e(0, i) = 1.0;
        EXPECT_DOUBLE_EQ(score_option(tape.constant(e), wt, b).value()(0, 0), w(i, 0) + 0.125);
    }
    Mat m1(1, 4), m2(1, 4);
    m1 << 1, 2, 3, 4;
    m2 << -1, 0.5, 2, 8;
    const double s1 = score_option(tape.constant(m1), wt, b).value()(0, 0);
    const double s2 = score_option(tape.constant(m2), wt, b).value()(0, 0);
    const double s12 = score_option(tape.constant(m1 + m2), wt, b).value()(0, 0);
    EXPECT_NEAR(s12, s1 + s2 - 0.125, 1e-12);
    EXPECT_THROW(score_option(tape.constant(Mat::Zero(1, 3)), wt, b), DimensionError);
}

TEST(ArgmaxLowest, TiesGoToLowestIndex) {
    const std::array<double, 5> a{1, 3, 3, 2, 3};
    EXPECT_EQ(argmax_lowest(a), 1);
    const std::array<double, 5> flat{0, 0, 0, 0, 0};
    EXPECT_EQ(argmax_lowest(flat), 0);
    const std::array<double, 3> last{-5, -4, -1};
    EXPECT_EQ(argmax_lowest(last), 2);
    EXPECT_THROW(argmax_lowest(std::span<const double>{}), ValidationError);
}

TEST(Model, IdenticalOptionsTieAndPredictZero) {
    Model m(tiny_config(), 3);
    const auto inst = instance_from({{{9, 10}, {9, 10}, {9, 10}, {9, 10}, {9, 10}}});
    const auto logits = m.logits(inst);
    for (double x : logits) EXPECT_EQ(x, logits[0]);
    EXPECT_EQ(m.predict(inst), 0);
}

TEST(Model, OptionPermutationPermutesLogits) {
    Model m(tiny_config(), 4);
    const std::array<std::vector<Index>, 5> opts{{{9}, {10, 11}, {12}, {13, 14, 15}, {16}}};
    const auto base = m.logits(instance_from(opts));
    const std::array<std::size_t, 5> perm{3, 0, 4, 1, 2};
    std::array<std::vector<Index>, 5> permuted;
    for (std::size_t k = 0; k < 5; ++k) permuted[k] = opts[perm[k]];
    const auto moved = m.logits(instance_from(permuted));
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(moved[k], base[perm[k]]);
}

TEST(Model, BiasShiftLeavesLossAndPredictionUnchanged) {
    Model m(tiny_config(), 5);
    const auto inst = instance_from({{{9}, {10}, {11}, {12}, {13}}});
    std::mt19937_64 rng(0);
    auto loss = [&] {
        DTape tape;
        return cross_entropy_softmax(m.instance_logits(tape, inst.options, false, rng), 2).value()(0, 0);
    };
    const double before = loss();
    const int pred = m.predict(inst);
    const auto l0 = m.logits(inst);
    m.head().bias->value(0, 0) += 3.0;
    const auto l1 = m.logits(inst);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(l1[k] - l0[k], 3.0, 1e-12);
    EXPECT_NEAR(loss(), before, 1e-12);
    EXPECT_EQ(m.predict(inst), pred);
}

TEST(Model, PaddingAmountDoesNotChangeScores) {
    Model m(tiny_config(), 6);
    const std::array<std::vector<Index>, 5> opts{{{9}, {10}, {11}, {12}, {13}}};
    const auto a = m.logits(instance_from(opts, 0));
    const auto b = m.logits(instance_from(opts, 5));
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Model, SameSeedSameModel) {
    Model a(tiny_config(), 7), b(tiny_config(), 7), c(tiny_config(), 8);
    const auto inst = instance_from({{{9}, {10}, {11}, {12}, {13}}});
    EXPECT_EQ(a.logits(inst), b.logits(inst));
    EXPECT_NE(a.logits(inst), c.logits(inst));
}

TEST(Model, DropoutOnlyInTraining) {
    Model m(tiny_config(), 9);
    m.set_dropout(0.5);
    const auto inst = instance_from({{{9}, {10}, {11}, {12}, {13}}});
    std::mt19937_64 r1(1), r2(2);
    DTape tape;
    const Mat eval1 = m.instance_logits(tape, inst.options, false, r1).value();
    const Mat eval2 = m.instance_logits(tape, inst.options, false, r2).value();
    EXPECT_EQ(eval1, eval2);
    const Mat train1 = m.instance_logits(tape, inst.options, true, r1).value();
    EXPECT_NE(train1, eval1);
    EXPECT_THROW(m.set_dropout(1.0), ParameterError);
    EXPECT_THROW(m.set_dropout(-0.1), ParameterError);
}

TEST(Model, ParameterNamesCoverEveryModule) {
    Model m(tiny_config(), 10);
    EXPECT_NE(m.parameters().find("encoder.token_embedding"), nullptr);
    EXPECT_NE(m.parameters().find("coattention.layer0.od_to_p.query"), nullptr);
    EXPECT_NE(m.parameters().find("coattention.layer0.p_to_od.norm.gamma"), nullptr);
    EXPECT_NE(m.parameters().find("classifier.weight"), nullptr);
    EXPECT_EQ(m.parameters().get("classifier.weight").value.rows(), 16);
}

TEST(Model, RejectsInvalidConfig) {
    ModelConfig c = tiny_config();
    c.encoder.n_heads = 3;
    EXPECT_THROW(Model(c, 1), ParameterError);
    c = tiny_config();
    c.coattention.layers = 0;
    EXPECT_THROW(Model(c, 1), ParameterError);
}

TEST(Model, SeparatorsChangeTheScore) {
    ModelConfig with = tiny_config();
    with.include_separators = true;
    Model a(tiny_config(), 11), b(with, 11);
    const auto inst = instance_from({{{9}, {10}, {11}, {12}, {13}}});
    EXPECT_NE(a.logits(inst), b.logits(inst));
}
