#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rgan/rng.hpp"
#include "rgan/tensor.hpp"

namespace rgan::data {

enum class DatasetSource { folder, synthetic, augmented };
enum class ShapeClass { circle, square };

const char* shape_class_name(ShapeClass s);
ShapeClass shape_class_from_name(const std::string& name);

// Ground truth for one synthetic sample. Hue is on the unit circle [0,1);
// center and size are fractions of the image side.
struct AttributeRecord {
  double hue = 0.0;       // [0, 1)
  double center_x = 0.5;  // [0, 1]
  double center_y = 0.5;  // [0, 1]
  double size = 0.5;      // (0, 1], shape extent / image side
  ShapeClass shape_class = ShapeClass::circle;

  void validate() const;
};

// One domain's images, stored as a contiguous (N, C, H, W) block in [-1,1].
class DomainDataset {
 public:
  DomainDataset() = default;
  DomainDataset(std::string domain_id, Index n, Index c, Index h, Index w,
                DatasetSource source);

  const std::string& domain_id() const { return domain_id_; }
  Index size() const { return n_; }
  Index channels() const { return c_; }
  Index height() const { return h_; }
  Index width() const { return w_; }
  DatasetSource source() const { return source_; }

  double* image_data(Index i) { return pixels_.data() + i * c_ * h_ * w_; }
  const double* image_data(Index i) const { return pixels_.data() + i * c_ * h_ * w_; }
  Index image_numel() const { return c_ * h_ * w_; }
  // Copy of sample i as a (C,H,W) tensor.
  Tensor image(Index i) const;
  void set_image(Index i, const Tensor& chw);

  Tensor& pixels() { return pixels_; }
  const Tensor& pixels() const { return pixels_; }

  bool has_attributes() const { return attributes_.has_value(); }
  const std::vector<AttributeRecord>& attributes() const;
  void set_attributes(std::vector<AttributeRecord> attrs);

  // Checks the pixel-range and attribute-count invariants; throws on breach.
  void validate() const;

  uint64_t checksum() const;

 private:
  std::string domain_id_;
  Index n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  DatasetSource source_ = DatasetSource::synthetic;
  Tensor pixels_;  // (N, C, H, W)
  std::optional<std::vector<AttributeRecord>> attributes_;
};

struct AttributeRanges {
  double center_min = 0.35, center_max = 0.65;
  double size_min = 0.30, size_max = 0.55;
};

struct SyntheticSpec {
  Index n_per_domain = 1000;
  Index image_size = 32;
  ShapeClass shape_x = ShapeClass::circle;
  ShapeClass shape_y = ShapeClass::square;
  AttributeRanges attribute_distribution;
  uint64_t seed = 0;

  void validate() const;
};

struct Batch {
  Tensor images;                  // (B, C, H, W)
  std::vector<uint32_t> indices;  // source sample indices

  Index batch_size() const { return images.rank() > 0 ? images.dim(0) : 0; }
};

struct AffineParams {
  double max_rotation_deg = 15.0;
  double max_translation = 0.10;  // fraction of side
  double scale_min = 0.90;
  double scale_max = 1.10;
};

// Renders one shape on the neutral background; exposed so the metrics-side
// attribute extractor can be validated against it directly.
Tensor render_shape(const AttributeRecord& attr, Index image_size);

// Two unpaired datasets over the same attribute families; attributes are
// drawn independently per domain.
std::pair<DomainDataset, DomainDataset> generate_synthetic_pair(const SyntheticSpec& spec);

// Reads <path>/*.png|jpg, center-crops to square and resizes. Undecodable
// files are skipped with a warning on stderr; an empty result is an error.
DomainDataset load_image_domain(const std::filesystem::path& path, Index image_size);

// factor copies per source image; copy 0 is the identity.
DomainDataset augment_affine(const DomainDataset& dataset, Index factor,
                             const AffineParams& params, uint64_t seed);

// Epoch-shuffled sampling state: every index appears once per epoch, epochs
// reshuffle from `rng`. Not safe to share across concurrent consumers.
struct SamplerState {
  std::vector<uint32_t> permutation;
  uint64_t cursor = 0;
};

Batch sample_batch(const DomainDataset& dataset, Index batch_size,
                   SamplerState& state, Rng& rng);

// Directory persistence: 000000.png ... plus attributes.csv with columns
// filename, hue, center_x, center_y, size, shape_class.
void save_dataset(const DomainDataset& dataset, const std::filesystem::path& dir);
DomainDataset load_synthetic_dataset(const std::filesystem::path& dir,
                                     const std::string& domain_id);

}  // namespace rgan::data
