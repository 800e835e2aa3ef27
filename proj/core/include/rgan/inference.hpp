#pragma once

#include <filesystem>
#include <string>

#include "rgan/feature_space.hpp"
#include "rgan/models.hpp"

namespace rgan::infer {

// A tiled image grid plus the provenance needed to regenerate it exactly:
// the latents used and the checkpoint they went through.
struct SampleGrid {
  Tensor tiles;  // (rows*cols, C, H, W), row-major tile order
  Index rows = 0;
  Index cols = 0;
  std::string layout;  // "paired_columns" or "interpolation_rows"
  Index pairs_per_row = 0;
  uint64_t checkpoint_hash = 0;
  MatrixXd z;  // one row per latent used

  Tensor tile(Index row, Index col) const;
};

// n latent draws; tile columns 2i and 2i+1 within a row hold G^x(z) and
// G^y(z) for the same z. pairs_per_row=4 lays 8 pairs out as a 2x8 grid.
SampleGrid sample_pairs(models::ModelBundle& bundle, uint64_t checkpoint_hash,
                        Index n, uint64_t seed, Index pairs_per_row = 4);

// Both generators evaluated along the path z_t between z0 and z1 at `steps`
// points; row 0 is domain X, row 1 domain Y. Endpoints reproduce z0/z1
// generations exactly. Linear path by default; slerp behind the flag.
SampleGrid interpolate(models::ModelBundle& bundle, uint64_t checkpoint_hash,
                       const VectorXd& z0, const VectorXd& z1, Index steps,
                       bool spherical = false);

struct Reconstruction {
  Tensor reconstruction;  // G^source(M(E(image)))
  Tensor cross_domain;    // G^other(M(E(image)))
  VectorXd z_hat;
};

// source_domain is "x" or "y". Requires bundle.mapper (capability error
// otherwise) and an encoder matching the bundle's feature space.
Reconstruction reconstruct(models::ModelBundle& bundle,
                           features::EncoderModel& encoder, const Tensor& image,
                           const std::string& source_domain);

// Fits the feature->latent regression on frozen (G, E): draw z, generate in
// both domains, encode, minimize ||mapper(E(G(z))) - z||^2.
models::ZMapper train_z_mapper(models::ModelBundle& bundle,
                               features::EncoderModel& encoder, Index steps,
                               Index batch_size, double lr, uint64_t seed);

// Tiles -> single (C, rows*H, cols*W) image.
Tensor assemble_grid_image(const SampleGrid& grid);

// PNG plus a JSON sidecar (<path>.json) carrying checkpoint hash, layout
// and the z array.
void write_grid(const SampleGrid& grid, const std::filesystem::path& png_path);

struct GridSidecar {
  uint64_t checkpoint_hash = 0;
  std::string layout;
  Index rows = 0, cols = 0, pairs_per_row = 0;
  MatrixXd z;
};
GridSidecar load_grid_sidecar(const std::filesystem::path& json_path);

}  // namespace rgan::infer
