#include <doctest.h>

#include "rgan/models.hpp"
#include "rgan/nn.hpp"
#include "test_util.hpp"

using namespace rgan;
using namespace test_util;

TEST_CASE("generator: shape, tanh range, determinism") {
  Rng rng(1);
  models::LatentSpec latent{100, models::LatentDistribution::uniform};
  auto g = models::build_generator(latent, 64, {16}, rng);

  Rng zr(2);
  Tensor z = models::sample_latent(latent, 3, zr);
  Tensor out = g.generate(z, false);
  CHECK(out.shape() == std::vector<Index>{3, 3, 64, 64});
  CHECK(out.array().abs().maxCoeff() < 1.0);

  Tensor out2 = g.generate(z, false);
  CHECK(out.array().isApprox(out2.array(), 0.0));

  CHECK_THROWS_AS(models::build_generator(latent, 48, {16}, rng), Error);
}

TEST_CASE("latent sampling respects the distribution") {
  Rng rng(3);
  models::LatentSpec uni{64, models::LatentDistribution::uniform};
  Tensor zu = models::sample_latent(uni, 100, rng);
  CHECK(zu.array().minCoeff() >= -1.0);
  CHECK(zu.array().maxCoeff() < 1.0);

  models::LatentSpec norm{64, models::LatentDistribution::standard_normal};
  Tensor zn = models::sample_latent(norm, 1000, rng);
  CHECK(std::abs(zn.array().mean()) < 0.02);
  CHECK(zn.array().square().mean() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("image discriminator: range, batch independence, input gradients") {
  Rng rng(4);
  auto d = models::build_image_discriminator(32, {8}, rng);
  Tensor x = random_tensor({4, 3, 32, 32}, 5);
  Tensor p = d.discriminate(x, false);
  CHECK(p.shape() == std::vector<Index>{4, 1});
  for (Index i = 0; i < 4; ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
  }

  // doubled batch = concatenated halves (eval mode)
  Tensor xx({8, 3, 32, 32});
  std::copy(x.data(), x.data() + x.numel(), xx.data());
  std::copy(x.data(), x.data() + x.numel(), xx.data() + x.numel());
  Tensor pp = d.discriminate(xx, false);
  for (Index i = 0; i < 4; ++i) {
    CHECK(pp[i] == p[i]);
    CHECK(pp[4 + i] == p[i]);
  }

  // analytic input gradient vs central differences at random pixels
  Tensor out = d.discriminate(x, false);
  LinearReadout readout(out.numel(), 6);
  Tensor analytic = d.net.backward(readout.grad(out.shape()));
  auto f = [&](const Tensor& in) { return readout.value(d.discriminate(in, false)); };
  auto res = grad_check(f, x, analytic, pick_coords(x.numel(), 10, 7));
  CHECK(res.max_rel_err < 1e-3);
}

TEST_CASE("feature discriminator: exactly three affine layers, permutation, gradients") {
  Rng rng(8);
  auto fd = models::build_feature_discriminator(16, rng);

  Index dense_count = 0;
  for (const auto& l : fd.net.layers())
    if (std::string(l->kind()) == "dense") ++dense_count;
  CHECK(dense_count == 3);

  Tensor f = random_tensor({5, 16}, 9);
  Tensor p = fd.discriminate(f, false);
  CHECK(p.shape() == std::vector<Index>{5, 1});
  for (Index i = 0; i < 5; ++i) {
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
  }

  // permuting rows permutes outputs identically
  Tensor fperm({5, 16});
  const Index perm[5] = {3, 1, 4, 0, 2};
  for (Index i = 0; i < 5; ++i)
    std::copy(f.data() + perm[i] * 16, f.data() + (perm[i] + 1) * 16,
              fperm.data() + i * 16);
  Tensor pperm = fd.discriminate(fperm, false);
  for (Index i = 0; i < 5; ++i) CHECK(pperm[i] == p[perm[i]]);

  Tensor out = fd.discriminate(f, false);
  LinearReadout readout(out.numel(), 10);
  Tensor analytic = fd.net.backward(readout.grad(out.shape()));
  auto fn = [&](const Tensor& in) { return readout.value(fd.discriminate(in, false)); };
  auto res = grad_check(fn, f, analytic, pick_coords(f.numel(), 16, 11));
  CHECK(res.max_rel_err < 1e-3);
}

TEST_CASE("generator input gradients match finite differences") {
  Rng rng(12);
  models::LatentSpec latent{32, models::LatentDistribution::uniform};
  auto g = models::build_generator(latent, 32, {8}, rng);
  Rng zr(13);
  Tensor z = models::sample_latent(latent, 2, zr);

  Tensor out = g.generate(z, false);
  LinearReadout readout(out.numel(), 14);
  Tensor analytic = g.net.backward(readout.grad(out.shape()));
  auto f = [&](const Tensor& zz) { return readout.value(g.generate(zz, false)); };
  auto res = grad_check(f, z, analytic, pick_coords(z.numel(), 16, 15));
  CHECK(res.max_rel_err < 1e-3);
}

TEST_CASE("cogan pair: tying layout and checksums at construction") {
  Rng rng(16);
  models::LatentSpec latent{64, models::LatentDistribution::uniform};
  auto pair = models::build_cogan_pair(latent, 32, {8}, rng);

  CHECK(pair.manifest.tied());
  // generators: all layers except the last deconv block are the same objects
  const auto& gx = pair.gen_x.net.layers();
  const auto& gy = pair.gen_y.net.layers();
  REQUIRE(gx.size() == gy.size());
  for (size_t i = 0; i + 2 < gx.size(); ++i) CHECK(gx[i].get() == gy[i].get());
  CHECK(gx[gx.size() - 2].get() != gy[gy.size() - 2].get());

  // discriminators: all layers except the first conv block shared
  const auto& dx = pair.disc_x.net.layers();
  const auto& dy = pair.disc_y.net.layers();
  REQUIRE(dx.size() == dy.size());
  CHECK(dx[0].get() != dy[0].get());
  for (size_t i = 2; i < dx.size(); ++i) CHECK(dx[i].get() == dy[i].get());

  // shared-layer checksums trivially equal; untied layers differ after init
  for (Index idx : pair.manifest.generator_shared)
    CHECK(models::layer_params_checksum(*gx[idx]) ==
          models::layer_params_checksum(*gy[idx]));
  CHECK(models::layer_params_checksum(*gx[gx.size() - 2]) !=
        models::layer_params_checksum(*gy[gy.size() - 2]));

  // both generators produce valid images from the same z
  Rng zr(17);
  Tensor z = models::sample_latent(latent, 2, zr);
  Tensor ix = pair.gen_x.generate(z, false);
  Tensor iy = pair.gen_y.generate(z, false);
  CHECK(ix.shape() == iy.shape());
}

TEST_CASE("cogan tied layers receive the sum of both domains' gradients") {
  Rng rng(18);
  models::LatentSpec latent{16, models::LatentDistribution::uniform};
  auto pair = models::build_cogan_pair(latent, 32, {8}, rng);
  Rng zr(19);
  Tensor z = models::sample_latent(latent, 3, zr);

  auto backward_domain = [&](models::Generator& g) {
    Tensor out = g.generate(z, true);
    Tensor grad(out.shape());
    grad.fill(1.0 / out.numel());
    g.net.backward(grad);
  };

  // pass 1: domain x only
  pair.gen_x.net.zero_grad();
  pair.gen_y.net.zero_grad();
  backward_domain(pair.gen_x);
  std::vector<Eigen::ArrayXd> gx_only;
  for (nn::Param* p : nn::dedup_params(pair.gen_x.net.params()))
    gx_only.push_back(p->grad.array());

  // pass 2: domain y only
  pair.gen_x.net.zero_grad();
  pair.gen_y.net.zero_grad();
  backward_domain(pair.gen_y);
  std::vector<Eigen::ArrayXd> gy_only;
  for (nn::Param* p : nn::dedup_params(pair.gen_x.net.params()))
    gy_only.push_back(p->grad.array());

  // pass 3: both domains accumulate
  pair.gen_x.net.zero_grad();
  pair.gen_y.net.zero_grad();
  backward_domain(pair.gen_x);
  backward_domain(pair.gen_y);
  auto params = nn::dedup_params(pair.gen_x.net.params());
  for (size_t i = 0; i < params.size(); ++i) {
    const Eigen::ArrayXd expect = gx_only[i] + gy_only[i];
    CHECK((params[i]->grad.array() - expect).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("cogan tying survives optimizer steps; untied layers may diverge") {
  Rng rng(20);
  models::LatentSpec latent{16, models::LatentDistribution::uniform};
  auto pair = models::build_cogan_pair(latent, 32, {8}, rng);

  std::vector<nn::Param*> all = pair.gen_x.net.params();
  for (nn::Param* p : pair.gen_y.net.params()) all.push_back(p);
  nn::Adam opt(all, {1e-3, 0.5, 0.999, 1e-8});

  Rng zr(21);
  for (int step = 0; step < 100; ++step) {
    Tensor z = models::sample_latent(latent, 2, zr);
    opt.zero_grad();
    // different per-domain objectives so untied tails actually diverge
    Tensor ox = pair.gen_x.generate(z, true);
    Tensor gx(ox.shape());
    gx.array() = 2.0 * (ox.array() - 0.5) / ox.numel();
    pair.gen_x.net.backward(gx);
    Tensor oy = pair.gen_y.generate(z, true);
    Tensor gy(oy.shape());
    gy.array() = 2.0 * (oy.array() + 0.5) / oy.numel();
    pair.gen_y.net.backward(gy);
    opt.step();
  }

  const auto& gx_layers = pair.gen_x.net.layers();
  const auto& gy_layers = pair.gen_y.net.layers();
  for (Index idx : pair.manifest.generator_shared)
    CHECK(models::layer_params_checksum(*gx_layers[idx]) ==
          models::layer_params_checksum(*gy_layers[idx]));
  CHECK(models::layer_params_checksum(*gx_layers[gx_layers.size() - 2]) !=
        models::layer_params_checksum(*gy_layers[gy_layers.size() - 2]));
}

TEST_CASE("z mapper: three layers, shapes, determinism") {
  Rng rng(22);
  auto m = models::build_z_mapper(24, 16, rng);
  Index dense_count = 0;
  for (const auto& l : m.net.layers())
    if (std::string(l->kind()) == "dense") ++dense_count;
  CHECK(dense_count == 3);

  Tensor f = random_tensor({7, 24}, 23);
  Tensor z1 = m.map(f);
  CHECK(z1.shape() == std::vector<Index>{7, 16});
  Tensor z2 = m.map(f);
  CHECK(z1.array().isApprox(z2.array(), 0.0));
}

TEST_CASE("bundle serialization round-trips tying and optional members") {
  Rng rng(24);
  models::LatentSpec latent{32, models::LatentDistribution::uniform};

  models::ModelBundle b;
  auto pair = models::build_cogan_pair(latent, 32, {8}, rng);
  b.gen_x = std::move(pair.gen_x);
  b.gen_y = std::move(pair.gen_y);
  b.disc_x = std::move(pair.disc_x);
  b.disc_y = std::move(pair.disc_y);
  b.tying = std::move(pair.manifest);
  b.ae_hash = 0x1122;
  b.iteration = 77;

  BinaryWriter w;
  b.save(w);
  BinaryReader r(w.bytes());
  models::ModelBundle loaded = models::ModelBundle::load(r);

  CHECK(loaded.ae_hash == 0x1122);
  CHECK(loaded.iteration == 77);
  CHECK(loaded.gen_x.params_checksum() == b.gen_x.params_checksum());
  CHECK(loaded.gen_y.params_checksum() == b.gen_y.params_checksum());
  CHECK(loaded.tying.generator_shared == b.tying.generator_shared);

  // aliasing is restored as aliasing, not as equal copies
  const auto& lgx = loaded.gen_x.net.layers();
  const auto& lgy = loaded.gen_y.net.layers();
  for (Index idx : loaded.tying.generator_shared)
    CHECK(lgx[idx].get() == lgy[idx].get());

  // identical outputs
  Rng zr(25);
  Tensor z = models::sample_latent(latent, 2, zr);
  Tensor o1 = b.gen_x.generate(z, false);
  Tensor o2 = loaded.gen_x.generate(z, false);
  CHECK(o1.array().isApprox(o2.array(), 0.0));
}
