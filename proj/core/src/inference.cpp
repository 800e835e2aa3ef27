#include "rgan/inference.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rgan/image_io.hpp"

namespace rgan::infer {

namespace fs = std::filesystem;
using json = nlohmann::json;

Tensor SampleGrid::tile(Index row, Index col) const {
  require(row >= 0 && row < rows && col >= 0 && col < cols, ErrorCategory::shape,
          "tile index out of grid");
  const Index c = tiles.dim(1), h = tiles.dim(2), w = tiles.dim(3);
  const Index i = row * cols + col;
  Tensor t({c, h, w});
  std::copy(tiles.data() + i * c * h * w, tiles.data() + (i + 1) * c * h * w, t.data());
  return t;
}

namespace {

// Copies generated batches into the tile block at the pair positions.
void place_pair_tiles(Tensor& tiles, Index cols, const Tensor& gen_x,
                      const Tensor& gen_y, Index pairs_per_row) {
  const Index n = gen_x.dim(0);
  const Index numel = gen_x.numel() / n;
  for (Index p = 0; p < n; ++p) {
    const Index row = p / pairs_per_row;
    const Index col = 2 * (p % pairs_per_row);
    const Index ix = row * cols + col;
    const Index iy = row * cols + col + 1;
    std::copy(gen_x.data() + p * numel, gen_x.data() + (p + 1) * numel,
              tiles.data() + ix * numel);
    std::copy(gen_y.data() + p * numel, gen_y.data() + (p + 1) * numel,
              tiles.data() + iy * numel);
  }
}

}  // namespace

SampleGrid sample_pairs(models::ModelBundle& bundle, uint64_t checkpoint_hash,
                        Index n, uint64_t seed, Index pairs_per_row) {
  require(n >= 1, ErrorCategory::config, "need n >= 1 pairs");
  require(pairs_per_row >= 1, ErrorCategory::config, "pairs_per_row must be >= 1");
  pairs_per_row = std::min(pairs_per_row, n);

  Rng rng(seed);
  Tensor z = models::sample_latent(bundle.gen_x.latent, n, rng);
  Tensor gx = bundle.gen_x.generate(z, false);
  Tensor gy = bundle.gen_y.generate(z, false);

  SampleGrid grid;
  grid.rows = (n + pairs_per_row - 1) / pairs_per_row;
  grid.cols = 2 * pairs_per_row;
  grid.layout = "paired_columns";
  grid.pairs_per_row = pairs_per_row;
  grid.checkpoint_hash = checkpoint_hash;
  grid.z = z.mat(n, bundle.gen_x.latent.z_dim);
  grid.tiles = Tensor({grid.rows * grid.cols, gx.dim(1), gx.dim(2), gx.dim(3)});
  place_pair_tiles(grid.tiles, grid.cols, gx, gy, pairs_per_row);
  return grid;
}

SampleGrid interpolate(models::ModelBundle& bundle, uint64_t checkpoint_hash,
                       const VectorXd& z0, const VectorXd& z1, Index steps,
                       bool spherical) {
  const Index z_dim = bundle.gen_x.latent.z_dim;
  require(z0.size() == z_dim && z1.size() == z_dim, ErrorCategory::shape,
          "latent dimension mismatch");
  require(steps >= 2, ErrorCategory::config, "need steps >= 2");

  Tensor z({steps, z_dim});
  auto zm = z.mat(steps, z_dim);
  const double denom = static_cast<double>(steps - 1);
  if (spherical) {
    const double dot = z0.normalized().dot(z1.normalized());
    const double omega = std::acos(std::clamp(dot, -1.0, 1.0));
    const double so = std::sin(omega);
    for (Index i = 0; i < steps; ++i) {
      const double t = i / denom;
      if (so < 1e-9) {
        zm.row(i) = ((1.0 - t) * z0 + t * z1).transpose();
      } else {
        zm.row(i) = (std::sin((1.0 - t) * omega) / so * z0 +
                     std::sin(t * omega) / so * z1)
                        .transpose();
      }
    }
  } else {
    for (Index i = 0; i < steps; ++i) {
      const double t = i / denom;
      zm.row(i) = ((1.0 - t) * z0 + t * z1).transpose();
    }
  }
  // Exact endpoints regardless of rounding in the blend above.
  zm.row(0) = z0.transpose();
  zm.row(steps - 1) = z1.transpose();

  // One forward per frame: endpoint frames then reproduce single-latent
  // generation bit-exactly (batched GEMMs round differently per size).
  SampleGrid grid;
  grid.rows = 2;
  grid.cols = steps;
  grid.layout = "interpolation_rows";
  grid.pairs_per_row = 0;
  grid.checkpoint_hash = checkpoint_hash;
  grid.z = zm;
  const Index c = 3, side = bundle.gen_x.image_size;
  grid.tiles = Tensor({2 * steps, c, side, side});
  const Index numel = c * side * side;
  for (Index i = 0; i < steps; ++i) {
    Tensor zi({1, z_dim});
    for (Index j = 0; j < z_dim; ++j) zi[j] = zm(i, j);
    Tensor fx = bundle.gen_x.generate(zi, false);
    Tensor fy = bundle.gen_y.generate(zi, false);
    std::copy(fx.data(), fx.data() + numel, grid.tiles.data() + i * numel);
    std::copy(fy.data(), fy.data() + numel, grid.tiles.data() + (steps + i) * numel);
  }
  return grid;
}

Reconstruction reconstruct(models::ModelBundle& bundle,
                           features::EncoderModel& encoder, const Tensor& image,
                           const std::string& source_domain) {
  require(bundle.mapper.has_value(), ErrorCategory::capability,
          "checkpoint has no trained feature-to-latent mapper");
  require(source_domain == "x" || source_domain == "y", ErrorCategory::config,
          "source_domain must be x or y");
  require(image.rank() == 3, ErrorCategory::shape, "expected (C,H,W)");
  require(image.dim(1) == encoder.image_size && image.dim(2) == encoder.image_size,
          ErrorCategory::shape, "image does not match model resolution");

  Tensor batch({1, image.dim(0), image.dim(1), image.dim(2)});
  std::copy(image.data(), image.data() + image.numel(), batch.data());
  const MatrixXd feat = features::encode(encoder, batch);
  Tensor feat_t({1, encoder.feature_dim});
  feat_t.mat(1, encoder.feature_dim) = feat;
  Tensor z_hat = bundle.mapper->map(feat_t);

  models::Generator& g_src = source_domain == "x" ? bundle.gen_x : bundle.gen_y;
  models::Generator& g_other = source_domain == "x" ? bundle.gen_y : bundle.gen_x;
  Tensor recon_b = g_src.generate(z_hat, false);
  Tensor cross_b = g_other.generate(z_hat, false);

  Reconstruction out;
  out.z_hat = z_hat.mat(1, bundle.gen_x.latent.z_dim).row(0);
  out.reconstruction = Tensor({recon_b.dim(1), recon_b.dim(2), recon_b.dim(3)});
  std::copy(recon_b.data(), recon_b.data() + recon_b.numel(), out.reconstruction.data());
  out.cross_domain = Tensor({cross_b.dim(1), cross_b.dim(2), cross_b.dim(3)});
  std::copy(cross_b.data(), cross_b.data() + cross_b.numel(), out.cross_domain.data());
  return out;
}

models::ZMapper train_z_mapper(models::ModelBundle& bundle,
                               features::EncoderModel& encoder, Index steps,
                               Index batch_size, double lr, uint64_t seed) {
  require(steps >= 1 && batch_size >= 1, ErrorCategory::config,
          "mapper training needs steps >= 1, batch >= 1");
  Rng rng(seed);
  models::ZMapper mapper =
      models::build_z_mapper(encoder.feature_dim, bundle.gen_x.latent.z_dim, rng);
  nn::Adam opt(mapper.net.params(), {lr, 0.9, 0.999, 1e-8});

  for (Index step = 0; step < steps; ++step) {
    // Alternate domains; G and E stay frozen, only the mapper trains.
    Tensor z = models::sample_latent(bundle.gen_x.latent, batch_size, rng);
    models::Generator& g = (step % 2 == 0) ? bundle.gen_x : bundle.gen_y;
    Tensor fake = g.generate(z, false);
    const MatrixXd feat = features::encode(encoder, fake);
    Tensor feat_t({batch_size, encoder.feature_dim});
    feat_t.mat(batch_size, encoder.feature_dim) = feat;

    opt.zero_grad();
    Tensor pred = mapper.net.forward(feat_t, true);
    Tensor grad(pred.shape());
    grad.array() = 2.0 * (pred.array() - z.array()) / pred.numel();
    mapper.net.backward(grad);
    require(opt.grads_finite(), ErrorCategory::training,
            "mapper training diverged at step " + std::to_string(step));
    opt.step();
  }
  return mapper;
}

Tensor assemble_grid_image(const SampleGrid& grid) {
  const Index c = grid.tiles.dim(1), h = grid.tiles.dim(2), w = grid.tiles.dim(3);
  Tensor img({c, grid.rows * h, grid.cols * w});
  img.fill(-1.0);
  const Index big_w = grid.cols * w;
  for (Index r = 0; r < grid.rows; ++r)
    for (Index col = 0; col < grid.cols; ++col) {
      const Index t = r * grid.cols + col;
      if (t >= grid.tiles.dim(0)) continue;
      for (Index ch = 0; ch < c; ++ch)
        for (Index y = 0; y < h; ++y)
          for (Index x = 0; x < w; ++x)
            img[(ch * grid.rows * h + (r * h + y)) * big_w + (col * w + x)] =
                grid.tiles[((t * c + ch) * h + y) * w + x];
    }
  return img;
}

void write_grid(const SampleGrid& grid, const fs::path& png_path) {
  io::write_png(png_path, assemble_grid_image(grid));

  json side;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(grid.checkpoint_hash));
  side["checkpoint_hash"] = hex;
  side["layout"] = grid.layout;
  side["rows"] = grid.rows;
  side["cols"] = grid.cols;
  side["pairs_per_row"] = grid.pairs_per_row;
  json zrows = json::array();
  for (Index i = 0; i < grid.z.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < grid.z.cols(); ++j) row.push_back(grid.z(i, j));
    zrows.push_back(std::move(row));
  }
  side["z"] = std::move(zrows);
  fs::path sidecar = png_path;
  sidecar += ".json";
  write_text_atomic(sidecar, side.dump(2) + "\n");
}

GridSidecar load_grid_sidecar(const fs::path& json_path) {
  std::ifstream in(json_path);
  require(in.good(), ErrorCategory::io, "cannot open " + json_path.string());
  json side = json::parse(in, nullptr, /*allow_exceptions=*/false);
  require(!side.is_discarded(), ErrorCategory::data,
          "malformed sidecar: " + json_path.string());

  GridSidecar out;
  out.checkpoint_hash =
      std::stoull(side.at("checkpoint_hash").get<std::string>(), nullptr, 16);
  out.layout = side.at("layout").get<std::string>();
  out.rows = side.at("rows").get<Index>();
  out.cols = side.at("cols").get<Index>();
  out.pairs_per_row = side.at("pairs_per_row").get<Index>();
  const auto& z = side.at("z");
  const Index n = static_cast<Index>(z.size());
  require(n > 0, ErrorCategory::data, "sidecar has no latents");
  const Index d = static_cast<Index>(z.front().size());
  out.z.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) out.z(i, j) = z.at(i).at(j).get<double>();
  return out;
}

}  // namespace rgan::infer
