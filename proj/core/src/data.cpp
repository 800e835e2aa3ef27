#include "rgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rgan/image_io.hpp"
#include "rgan/serialize.hpp"

namespace rgan::data {

namespace fs = std::filesystem;

const char* shape_class_name(ShapeClass s) {
  return s == ShapeClass::circle ? "circle" : "square";
}

ShapeClass shape_class_from_name(const std::string& name) {
  if (name == "circle") return ShapeClass::circle;
  if (name == "square") return ShapeClass::square;
  fail(ErrorCategory::config, "unknown shape class: " + name);
}

void AttributeRecord::validate() const {
  require(hue >= 0.0 && hue < 1.0, ErrorCategory::config, "hue out of [0,1)");
  require(center_x >= 0.0 && center_x <= 1.0, ErrorCategory::config, "center_x out of [0,1]");
  require(center_y >= 0.0 && center_y <= 1.0, ErrorCategory::config, "center_y out of [0,1]");
  require(size > 0.0 && size <= 1.0, ErrorCategory::config, "size out of (0,1]");
}

DomainDataset::DomainDataset(std::string domain_id, Index n, Index c, Index h,
                             Index w, DatasetSource source)
    : domain_id_(std::move(domain_id)), n_(n), c_(c), h_(h), w_(w), source_(source) {
  pixels_ = Tensor({n_, c_, h_, w_});
}

Tensor DomainDataset::image(Index i) const {
  require(i >= 0 && i < n_, ErrorCategory::data, "image index out of range");
  Tensor t({c_, h_, w_});
  std::copy(image_data(i), image_data(i) + image_numel(), t.data());
  return t;
}

void DomainDataset::set_image(Index i, const Tensor& chw) {
  require(chw.numel() == image_numel(), ErrorCategory::shape, "image size mismatch");
  std::copy(chw.data(), chw.data() + chw.numel(), image_data(i));
}

const std::vector<AttributeRecord>& DomainDataset::attributes() const {
  require(attributes_.has_value(), ErrorCategory::capability,
          "dataset has no attribute records");
  return *attributes_;
}

void DomainDataset::set_attributes(std::vector<AttributeRecord> attrs) {
  require(static_cast<Index>(attrs.size()) == n_, ErrorCategory::data,
          "attribute count != sample count");
  attributes_ = std::move(attrs);
}

void DomainDataset::validate() const {
  if (n_ > 0) {
    const double lo = pixels_.array().minCoeff();
    const double hi = pixels_.array().maxCoeff();
    require(lo >= -1.0 && hi <= 1.0, ErrorCategory::data,
            "pixels out of [-1,1]: min=" + std::to_string(lo) + " max=" + std::to_string(hi));
  }
  if (attributes_) {
    require(static_cast<Index>(attributes_->size()) == n_, ErrorCategory::data,
            "attribute count != sample count");
    for (const auto& a : *attributes_) a.validate();
  }
}

uint64_t DomainDataset::checksum() const {
  uint64_t h = fnv1a64(domain_id_);
  return fnv1a64(pixels_.data(), static_cast<size_t>(pixels_.numel()) * sizeof(double), h);
}

void SyntheticSpec::validate() const {
  require(n_per_domain >= 1, ErrorCategory::config, "n_per_domain must be >= 1");
  require(image_size >= 8, ErrorCategory::config, "image_size must be >= 8");
  const auto& r = attribute_distribution;
  require(r.center_min >= 0.0 && r.center_max <= 1.0 && r.center_min <= r.center_max,
          ErrorCategory::config, "center range invalid");
  require(r.size_min > 0.0 && r.size_max <= 1.0 && r.size_min <= r.size_max,
          ErrorCategory::config, "size range invalid");
}

namespace {

// Saturated hue -> RGB in [0,1].
void hue_to_rgb(double hue, double rgb[3]) {
  const double h6 = hue * 6.0;
  const int i = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  switch (i) {
    case 0: rgb[0] = 1; rgb[1] = f; rgb[2] = 0; break;
    case 1: rgb[0] = 1 - f; rgb[1] = 1; rgb[2] = 0; break;
    case 2: rgb[0] = 0; rgb[1] = 1; rgb[2] = f; break;
    case 3: rgb[0] = 0; rgb[1] = 1 - f; rgb[2] = 1; break;
    case 4: rgb[0] = f; rgb[1] = 0; rgb[2] = 1; break;
    default: rgb[0] = 1; rgb[1] = 0; rgb[2] = 1 - f; break;
  }
}

constexpr double kBackgroundGray = 0.15;  // neutral gray, zero saturation
constexpr int kSupersample = 4;

}  // namespace

Tensor render_shape(const AttributeRecord& attr, Index image_size) {
  attr.validate();
  const Index s = image_size;
  double rgb[3];
  hue_to_rgb(attr.hue, rgb);

  const double cx = attr.center_x * s;
  const double cy = attr.center_y * s;
  const double half = attr.size * s / 2.0;
  const double r2 = half * half;

  Tensor img({3, s, s});
  const double inv_ss = 1.0 / (kSupersample * kSupersample);
  for (Index y = 0; y < s; ++y) {
    for (Index x = 0; x < s; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        const double py = y + (sy + 0.5) / kSupersample - cy;
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double px = x + (sx + 0.5) / kSupersample - cx;
          const bool inside = attr.shape_class == ShapeClass::circle
                                  ? px * px + py * py <= r2
                                  : std::abs(px) <= half && std::abs(py) <= half;
          hits += inside ? 1 : 0;
        }
      }
      const double cov = hits * inv_ss;
      for (Index c = 0; c < 3; ++c) {
        const double v = cov * rgb[c] + (1.0 - cov) * kBackgroundGray;
        img[(c * s + y) * s + x] = 2.0 * v - 1.0;
      }
    }
  }
  return img;
}

std::pair<DomainDataset, DomainDataset> generate_synthetic_pair(const SyntheticSpec& spec) {
  spec.validate();
  Rng root(spec.seed);

  auto make_domain = [&](const std::string& id, ShapeClass shape, uint64_t stream) {
    Rng rng = root.split(stream);
    DomainDataset ds(id, spec.n_per_domain, 3, spec.image_size, spec.image_size,
                     DatasetSource::synthetic);
    std::vector<AttributeRecord> attrs(spec.n_per_domain);
    const auto& d = spec.attribute_distribution;
    for (Index i = 0; i < spec.n_per_domain; ++i) {
      AttributeRecord a;
      a.hue = rng.uniform();
      a.center_x = rng.uniform(d.center_min, d.center_max);
      a.center_y = rng.uniform(d.center_min, d.center_max);
      a.size = rng.uniform(d.size_min, d.size_max);
      a.shape_class = shape;
      ds.set_image(i, render_shape(a, spec.image_size));
      attrs[i] = a;
    }
    ds.set_attributes(std::move(attrs));
    return ds;
  };

  auto x = make_domain("x", spec.shape_x, 1);
  auto y = make_domain("y", spec.shape_y, 2);
  return {std::move(x), std::move(y)};
}

DomainDataset load_image_domain(const fs::path& path, Index image_size) {
  require(fs::is_directory(path), ErrorCategory::data,
          "not a directory: " + path.string());
  require(image_size >= 8, ErrorCategory::config, "image_size must be >= 8");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
  }
  require(!files.empty(), ErrorCategory::data, "no images in " + path.string());
  std::sort(files.begin(), files.end());

  std::vector<Tensor> images;
  images.reserve(files.size());
  for (const auto& f : files) {
    try {
      images.push_back(io::center_crop_resize(io::raw_to_chw(io::decode_image(f)), image_size));
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::data) {
        std::cerr << "warning: skipping " << f.string() << ": " << e.what() << "\n";
        continue;
      }
      throw;
    }
  }
  require(!images.empty(), ErrorCategory::data,
          "all images undecodable in " + path.string());

  DomainDataset ds(path.filename().string(), static_cast<Index>(images.size()), 3,
                   image_size, image_size, DatasetSource::folder);
  for (size_t i = 0; i < images.size(); ++i) ds.set_image(static_cast<Index>(i), images[i]);
  ds.validate();
  return ds;
}

namespace {

double bilinear_clamped(const double* plane, Index h, Index w, double y, double x) {
  const Index y0 = static_cast<Index>(std::floor(y));
  const Index x0 = static_cast<Index>(std::floor(x));
  const double fy = y - y0, fx = x - x0;
  auto at = [&](Index yy, Index xx) {
    yy = std::clamp(yy, Index{0}, h - 1);
    xx = std::clamp(xx, Index{0}, w - 1);
    return plane[yy * w + xx];
  };
  return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
         fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
}

}  // namespace

DomainDataset augment_affine(const DomainDataset& dataset, Index factor,
                             const AffineParams& params, uint64_t seed) {
  require(factor >= 1, ErrorCategory::config, "augment factor must be >= 1");
  const Index n = dataset.size(), c = dataset.channels();
  const Index h = dataset.height(), w = dataset.width();

  DomainDataset out(dataset.domain_id(), n * factor, c, h, w, DatasetSource::augmented);
  Rng rng(seed);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;

  for (Index i = 0; i < n; ++i) {
    const double* src = dataset.image_data(i);
    for (Index j = 0; j < factor; ++j) {
      double* dst = out.image_data(i * factor + j);
      if (j == 0) {
        std::copy(src, src + dataset.image_numel(), dst);
        continue;
      }
      const double theta = rng.uniform(-params.max_rotation_deg, params.max_rotation_deg) *
                           M_PI / 180.0;
      const double tx = rng.uniform(-params.max_translation, params.max_translation) * w;
      const double ty = rng.uniform(-params.max_translation, params.max_translation) * h;
      const double scale = rng.uniform(params.scale_min, params.scale_max);
      const double cos_t = std::cos(theta) / scale, sin_t = std::sin(theta) / scale;

      for (Index ch = 0; ch < c; ++ch) {
        const double* plane = src + ch * h * w;
        double* dplane = dst + ch * h * w;
        for (Index y = 0; y < h; ++y) {
          for (Index x = 0; x < w; ++x) {
            // Inverse map of rotate/scale about center then translate.
            const double dx = x - cx - tx, dy = y - cy - ty;
            const double sx = cos_t * dx + sin_t * dy + cx;
            const double sy = -sin_t * dx + cos_t * dy + cy;
            double v = bilinear_clamped(plane, h, w, sy, sx);
            dplane[y * w + x] = std::clamp(v, -1.0, 1.0);
          }
        }
      }
    }
  }
  return out;
}

Batch sample_batch(const DomainDataset& dataset, Index batch_size,
                   SamplerState& state, Rng& rng) {
  require(batch_size >= 1, ErrorCategory::config, "batch_size must be >= 1");
  require(dataset.size() >= 1, ErrorCategory::data, "cannot sample from empty dataset");
  const Index n = dataset.size();

  auto reshuffle = [&] {
    state.permutation.resize(n);
    for (Index i = 0; i < n; ++i) state.permutation[i] = static_cast<uint32_t>(i);
    rng.shuffle(state.permutation);
    state.cursor = 0;
  };
  if (state.permutation.size() != static_cast<size_t>(n)) reshuffle();

  Batch batch;
  batch.indices.reserve(batch_size);
  batch.images = Tensor({batch_size, dataset.channels(), dataset.height(), dataset.width()});
  for (Index b = 0; b < batch_size; ++b) {
    if (state.cursor >= static_cast<uint64_t>(n)) reshuffle();
    const uint32_t idx = state.permutation[state.cursor++];
    batch.indices.push_back(idx);
    std::copy(dataset.image_data(idx), dataset.image_data(idx) + dataset.image_numel(),
              batch.images.data() + b * dataset.image_numel());
  }
  return batch;
}

void save_dataset(const DomainDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  char name[32];
  for (Index i = 0; i < dataset.size(); ++i) {
    std::snprintf(name, sizeof name, "%06lld.png", static_cast<long long>(i));
    io::write_png(dir / name, dataset.image(i));
  }
  if (dataset.has_attributes()) {
    std::ostringstream csv;
    csv << "filename,hue,center_x,center_y,size,shape_class\n";
    char row[256];
    for (Index i = 0; i < dataset.size(); ++i) {
      const auto& a = dataset.attributes()[i];
      std::snprintf(row, sizeof row, "%06lld.png,%.17g,%.17g,%.17g,%.17g,%s\n",
                    static_cast<long long>(i), a.hue, a.center_x, a.center_y, a.size,
                    shape_class_name(a.shape_class));
      csv << row;
    }
    write_text_atomic(dir / "attributes.csv", csv.str());
  }
}

DomainDataset load_synthetic_dataset(const fs::path& dir, const std::string& domain_id) {
  const fs::path csv_path = dir / "attributes.csv";
  require(fs::exists(csv_path), ErrorCategory::data,
          "missing attributes.csv in " + dir.string());
  std::ifstream csv(csv_path);
  require(csv.good(), ErrorCategory::io, "cannot open " + csv_path.string());

  std::string line;
  std::getline(csv, line);  // header
  std::vector<std::string> filenames;
  std::vector<AttributeRecord> attrs;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string fields[6];
    for (int i = 0; i < 6; ++i)
      require(static_cast<bool>(std::getline(ls, fields[i], ',')), ErrorCategory::data,
              "malformed attributes.csv row: " + line);
    AttributeRecord a;
    a.hue = std::stod(fields[1]);
    a.center_x = std::stod(fields[2]);
    a.center_y = std::stod(fields[3]);
    a.size = std::stod(fields[4]);
    a.shape_class = shape_class_from_name(fields[5]);
    filenames.push_back(fields[0]);
    attrs.push_back(a);
  }
  require(!filenames.empty(), ErrorCategory::data, "empty attributes.csv");

  Tensor first = io::raw_to_chw(io::decode_image(dir / filenames[0]));
  const Index h = first.dim(1), w = first.dim(2);
  DomainDataset ds(domain_id, static_cast<Index>(filenames.size()), 3, h, w,
                   DatasetSource::synthetic);
  ds.set_image(0, first);
  for (size_t i = 1; i < filenames.size(); ++i) {
    Tensor img = io::raw_to_chw(io::decode_image(dir / filenames[i]));
    require(img.dim(1) == h && img.dim(2) == w, ErrorCategory::data,
            "inconsistent image sizes in " + dir.string());
    ds.set_image(static_cast<Index>(i), img);
  }
  ds.set_attributes(std::move(attrs));
  ds.validate();
  return ds;
}

}  // namespace rgan::data
