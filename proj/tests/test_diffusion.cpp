#include <doctest.h>

#include "dgd/checkpoint.hpp"
#include "dgd/denoiser.hpp"
#include "dgd/diffusion.hpp"
#include "dgd/hand_roster.hpp"
#include "dgd/sampler.hpp"
#include "dgd/training.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>

using namespace dgd;

namespace {

DenoiserConfig tiny_config() {
  DenoiserConfig c;
  c.width = 16;
  c.fusion_layers = 1;
  c.object_points = 32;
  c.hand_points = 32;
  return c;
}

PointCloud object_cloud(Index n, std::uint64_t seed = 1) {
  return farthest_point_sample(sample_surface_points(make_icosphere(0.035, 2), 4 * n, seed), n, seed);
}

GraspRecord shadow_record(const HandSpec& spec) {
  GraspRecord rec;
  rec.hand_class = spec.class_id;
  rec.rotation = random_rotation(5);
  HandPose p = open_pose(spec);
  p.translation = Eigen::Vector3d(0.01, -0.02, -0.05);
  for (int j = 0; j < spec.dof(); ++j) p.joints(j) = 0.3 + 0.02 * j;
  rec.pose = decanonicalize(clamp_to_limits(spec, p), rec.rotation);
  return rec;
}

}  // namespace

TEST_CASE("schedule invariants") {
  for (int T : {100, 500, 1000}) {
    const NoiseSchedule s = make_linear_schedule(T);
    CHECK(s.beta(1) == doctest::Approx(1e-4));
    CHECK(s.beta(T) == doctest::Approx(2e-2));
    double prod = 1;
    for (int t = 1; t <= T; ++t) {
      if (t > 1) {
        CHECK(s.beta(t) >= s.beta(t - 1));
        CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
      }
      prod *= 1 - s.beta(t);
      CHECK(std::abs(s.alpha_bar(t) - prod) <= 1e-12);
    }
  }
  CHECK_THROWS(make_linear_schedule(0));
  CHECK_THROWS(make_schedule(Eigen::VectorXd::Constant(2, 1.0)));
}

TEST_CASE("forward noising") {
  const NoiseSchedule s = make_schedule(Eigen::VectorXd::Constant(1, 0.36));
  PoseVector e1 = PoseVector::Unit(0);
  const PoseVector out = forward_noise(s, PoseVector::Zero().eval(), 1, e1);
  CHECK(out(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(out.tail<26>().isZero());

  const NoiseSchedule tiny = make_schedule(Eigen::VectorXd::Constant(1, 1e-300));
  PoseVector h0 = PoseVector::LinSpaced(-1, 1);
  CHECK(forward_noise(tiny, h0, 1, PoseVector::Ones().eval()) == h0);
  CHECK_THROWS(forward_noise(s, h0, 2, e1));
  CHECK_THROWS(forward_noise(s, h0, 0, e1));

  // closed form versus chained single steps
  const NoiseSchedule sch = make_linear_schedule(50);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  const int draws = 20000, t = 37;
  const Eigen::Vector2d x0(0.7, -1.2);
  Eigen::Vector2d sum_a = Eigen::Vector2d::Zero(), sum_b = sum_a, sq_a = sum_a, sq_b = sum_a;
  for (int d = 0; d < draws; ++d) {
    Eigen::Vector2d chained = x0;
    for (int k = 1; k <= t; ++k) chained = forward_step(sch, chained, k, Eigen::Vector2d(n(rng), n(rng)));
    const Eigen::Vector2d closed = forward_noise(sch, x0, t, Eigen::Vector2d(n(rng), n(rng)));
    sum_a += closed;
    sum_b += chained;
    sq_a += closed.cwiseAbs2();
    sq_b += chained.cwiseAbs2();
  }
  const double ab = sch.alpha_bar(t);
  for (int i = 0; i < 2; ++i) {
    const double se = std::sqrt((1 - ab) / draws);
    CHECK(std::abs(sum_a(i) / draws - std::sqrt(ab) * x0(i)) <= 4 * se);
    CHECK(std::abs(sum_b(i) / draws - std::sqrt(ab) * x0(i)) <= 4 * se);
    const double var_b = sq_b(i) / draws - std::pow(sum_b(i) / draws, 2);
    CHECK(std::abs(var_b - (1 - ab)) <= 4 * (1 - ab) * std::sqrt(2.0 / draws));
  }
}

TEST_CASE("masked L1 loss") {
  const auto roster = builtin_roster();
  const PaddingMask shadow = make_padding_mask(roster[4]);
  PoseVector eps = PoseVector::LinSpaced(-1, 1);
  CHECK(masked_l1_loss(shadow, eps, eps) == 0.0);
  CHECK(masked_l1_loss(shadow, (eps + PoseVector::Ones()).eval(), eps) == doctest::Approx(1.0).epsilon(1e-15));

  const PaddingMask two = make_padding_mask(roster[0]);
  PoseVector off = eps;
  off(20) += 5.0;
  CHECK(masked_l1_loss(two, off, eps) == 0.0);
  PoseVector hat = eps;
  hat(1) += 0.5;
  CHECK(masked_l1_loss(two, hat, eps) == doctest::Approx(0.5 / 5));
  CHECK(masked_l1_loss(two, hat, eps, false) == doctest::Approx(0.5));
  CHECK_THROWS(masked_l1_loss(PaddingMask{}, hat, eps));
}

TEST_CASE("conditioning embeddings") {
  const auto params = DenoiserParams::initialize(tiny_config(), 3);
  double min_gap = 1e9;
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b)
      min_gap = std::min(min_gap, (embed_class(params, a) - embed_class(params, b)).norm());
  CHECK(min_gap > 0);
  CHECK(embed_time(params, 17) == embed_time(params, 17));
  CHECK(embed_time(params, 17) != embed_time(params, 18));

  PaddingMask ones;
  ones.mask.setOnes();
  PaddingMask one_off = ones;
  one_off.mask(26) = 0;
  CHECK(embed_mask(params, ones) != embed_mask(params, one_off));
  CHECK_THROWS(embed_class(params, 5));
}

TEST_CASE("point encoders") {
  const auto params = DenoiserParams::initialize(tiny_config(), 4);
  const PointCloud obj = object_cloud(32);
  const CloudEncoding base = encode_object_cloud(params, obj);
  CHECK(base.global.size() == 16);
  CHECK(base.features.rows() == 32);

  std::vector<Index> perm(32);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  CHECK((encode_object_cloud(params, obj.subset(perm)).global - base.global).cwiseAbs().maxCoeff() <= 1e-9);

  PointCloud moved = obj;
  moved.points.rowwise() += Eigen::RowVector3d(0.1, 0, 0);
  CHECK(encode_object_cloud(params, moved).global != base.global);
  CHECK_THROWS(encode_object_cloud(params, object_cloud(31)));

  const auto roster = builtin_roster();
  PointCloud hand = sample_hand_cloud(roster[4], open_pose(roster[4]), 32, 2);
  hand.labels->setZero();
  PointCloud relabeled = hand;
  relabeled.labels->setOnes();
  const CloudEncoding he = encode_hand_cloud(params, hand);
  CHECK(encode_hand_cloud(params, relabeled).global != he.global);
  CHECK(encode_hand_cloud(params, hand).global == he.global);

  DenoiserConfig no_labels = tiny_config();
  no_labels.use_finger_labels = false;
  const auto p2 = DenoiserParams::initialize(no_labels, 4);
  CHECK(encode_hand_cloud(p2, relabeled).global == encode_hand_cloud(p2, hand).global);
}

TEST_CASE("max pooling ignores duplicated points") {
  const auto params = DenoiserParams::initialize(tiny_config(), 4);
  const PointCloud obj = object_cloud(32);
  // both clouds hold obj[0..30] plus one repeat, so the point sets agree
  PointCloud c = obj, d = obj;
  c.points.row(31) = obj.points.row(1);
  d.points.row(31) = obj.points.row(0);
  CHECK((encode_object_cloud(params, c).global - encode_object_cloud(params, d).global).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("noise prediction") {
  const auto roster = builtin_roster();
  const NoiseSchedule sch = make_linear_schedule(100);
  DenoiserConfig cfg = tiny_config();
  cfg.zero_init_head = true;
  const auto zero = DenoiserParams::initialize(cfg, 1);
  const PointCloud obj = object_cloud(32);
  for (const auto& spec : roster) {
    const PaddingMask m = make_padding_mask(spec);
    const PointCloud hand = sample_hand_cloud(spec, open_pose(spec), 32, 1);
    const auto cond = make_conditioning(zero, sch, 40, m, spec.class_id, obj, hand);
    const PoseVector eps = predict_noise(zero, PoseVector::Constant(0.3), cond);
    CHECK(eps.size() == 27);
    CHECK(eps.isZero(0));
  }

  auto params = DenoiserParams::initialize(tiny_config(), 2);
  const auto& spec = roster[4];
  const PaddingMask m = make_padding_mask(spec);
  const PointCloud hand = sample_hand_cloud(spec, open_pose(spec), 32, 1);
  const PoseVector h = PoseVector::Constant(0.1);
  const auto c1 = make_conditioning(params, sch, 40, m, 4, obj, hand);
  const auto c2 = make_conditioning(params, sch, 40, m, 4, object_cloud(32, 9), hand);
  CHECK(predict_noise(params, h, c1) != predict_noise(params, h, c2));
  CHECK(predict_noise(params, h, c1) == predict_noise(params, h, c1));

  auto bad = c1;
  bad.time.resize(3);
  CHECK_THROWS(predict_noise(params, h, bad));
  auto no_step = c1;
  no_step.alpha_bar = -1;
  CHECK_THROWS(predict_noise(params, h, no_step));
  CHECK_THROWS(make_conditioning(params, sch, 40, m, 4, object_cloud(20), hand));
}

TEST_CASE("loss gradient is zero on padded dims") {
  const auto roster = builtin_roster();
  const auto& spec = roster[0];
  const DenoiserConfig cfg = tiny_config();
  const auto params = DenoiserParams::initialize(cfg, 5);
  const NoiseSchedule sch = make_linear_schedule(100);
  GraspRecord rec;
  rec.hand_class = 0;
  rec.pose = open_pose(spec);
  const auto ex = make_training_example(spec, rec, object_cloud(32), cfg, 1);

  ad::Tape tape;
  DenoiserGraph g(tape, params);
  NoisedSample s{&ex, 30, PoseVector::Zero()};
  std::mt19937_64 rng(1);
  s = draw_noise({&ex}, sch, rng)[0];
  CHECK(s.noise.tail<22>().isZero());
  const PoseVector h_t = forward_noise(sch, ex.h0, s.t, s.noise);
  ad::Var pred = g.predict(tape.constant(ad::Matrix(h_t.transpose())), g.condition(sch, s.t, ex.mask, 0,
                                                                                       ex.object_cloud,
                                                                                       hand_cloud_at(spec, ex.hand_samples, h_t)));
  ad::Var loss = ad::masked_l1(tape, pred, s.noise.transpose(), ex.mask.mask.transpose(), true);
  tape.backward(loss);
  const ad::Matrix gp = tape.grad(pred);
  CHECK(gp.rightCols(22).isZero(0));
  CHECK(gp.leftCols(5).norm() > 0);
}

TEST_CASE("training") {
  const auto roster = builtin_roster();
  const auto& spec = roster[4];
  DenoiserConfig cfg;
  cfg.width = 32;
  cfg.fusion_layers = 2;
  cfg.object_points = 64;
  cfg.hand_points = 32;
  const GraspRecord rec = shadow_record(spec);
  const PointCloud obj = sample_surface_points(make_icosphere(0.035, 2), 256, 1);
  std::vector<TrainingExample> ex{make_training_example(spec, rec, obj, cfg, 2)};
  CHECK(ex[0].object_cloud.size() == 64);
  const NoiseSchedule sch = make_linear_schedule(100);

  TrainConfig tc;
  tc.steps = 500;
  tc.batch_size = 8;
  tc.adam.lr = 1e-3;
  tc.cosine_decay = true;
  tc.seed = 3;
  auto params = DenoiserParams::initialize(cfg, 1);
  const auto curve = train(params, ex, sch, tc);
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += curve[i] / 10;
    last += curve[curve.size() - 1 - i] / 10;
  }
  CHECK(last <= 0.1 * first);

  tc.steps = 20;
  auto p1 = DenoiserParams::initialize(cfg, 1);
  auto p2 = DenoiserParams::initialize(cfg, 1);
  CHECK(train(p1, ex, sch, tc) == train(p2, ex, sch, tc));
  for (std::size_t i = 0; i < p1.params.size(); ++i) CHECK(p1.params[i].value == p2.params[i].value);

  CHECK_THROWS(train(p1, {}, sch, tc));
  GraspRecord wrong = rec;
  wrong.hand_class = 0;
  CHECK_THROWS(make_training_example(spec, wrong, obj, cfg, 1));
}

TEST_CASE("reverse sampling keeps padding and limits") {
  const auto roster = builtin_roster();
  const DenoiserConfig cfg = tiny_config();
  const auto params = DenoiserParams::initialize(cfg, 6);
  const NoiseSchedule sch = make_linear_schedule(20);
  const PointCloud obj = object_cloud(32);
  for (const auto& spec : roster) {
    std::vector<PoseVector> seen;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const GraspRecord r = reverse_sample(params, sch, spec, obj, random_rotation(seed), seed, "ball");
      CHECK(r.hand_class == spec.class_id);
      CHECK(r.object_id == "ball");
      CHECK(satisfies_padding(spec, r.pose));
      CHECK(within_limits(spec, r.pose));
      for (const auto& s : seen) CHECK((s - r.pose.to_vector()).norm() > 0);
      seen.push_back(r.pose.to_vector());
    }
    const auto a = reverse_sample(params, sch, spec, obj, Rotation3(), 4);
    const auto b = reverse_sample(params, sch, spec, obj, Rotation3(), 4);
    CHECK(a.pose.to_vector() == b.pose.to_vector());
  }
}

TEST_CASE("checkpoint round-trip") {
  const auto dir = test::scratch_dir("checkpoint");
  Checkpoint ck{DenoiserParams::initialize(tiny_config(), 8), make_linear_schedule(500)};
  save_checkpoint(ck, dir);
  const Checkpoint back = load_checkpoint(dir);
  CHECK(back.schedule.steps == 500);
  CHECK(back.params.config.width == 16);
  REQUIRE(back.params.params.size() == ck.params.params.size());
  for (std::size_t i = 0; i < ck.params.params.size(); ++i) {
    CHECK(back.params.params[i].name == ck.params.params[i].name);
    CHECK(back.params.params[i].value == ck.params.params[i].value.cast<float>().cast<double>());
  }
  CHECK((back.schedule.alpha_bars - ck.schedule.alpha_bars).cwiseAbs().maxCoeff() <= 1e-15);
  std::filesystem::remove(dir / "head_w.dgd1");
  CHECK_THROWS(load_checkpoint(dir));
}
