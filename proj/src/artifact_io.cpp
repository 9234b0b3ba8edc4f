#include <array>

#include "lkd/engine.hpp"

namespace lkd {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'L', 'K', 'D', 'I'};

void write_vector(ByteWriter& out, const VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i) out.f64(v(i));
}

VectorXd read_vector(ByteReader& in, Index n) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = in.f64();
  return v;
}

// Both normalization sections: u64 length, then two f64 vectors of it.
ByteWriter pair_section(const VectorXd& a, const VectorXd& b) {
  ByteWriter s;
  s.u64(static_cast<std::uint64_t>(a.size()));
  write_vector(s, a);
  write_vector(s, b);
  return s;
}

Index read_pair_length(ByteReader& in) {
  const std::uint64_t len = in.u64();
  if (in.remaining() != len * 16) throw CorruptArtifact("normalization section length mismatch");
  return static_cast<Index>(len);
}

void check_header(ByteReader& in) {
  for (std::uint8_t c : kMagic) {
    if (in.u8() != c) throw CorruptArtifact("not an index file");
  }
  const std::uint8_t version = in.u8();
  if (version != kIndexVersion) {
    throw VersionUnsupported("index version " + std::to_string(version) + " is not supported");
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_index(const IndexArtifact& artifact) {
  ByteWriter out;
  for (std::uint8_t c : kMagic) out.u8(c);
  out.u8(kIndexVersion);
  out.section(pair_section(artifact.zscore.mean, artifact.zscore.std));
  out.section(pair_section(artifact.kdist_norm.min, artifact.kdist_norm.max));

  ByteWriter model;
  ByteWriter bounds;
  if (artifact.is_baseline()) {
    model.tag("COP1");
    artifact.baseline().serialize(model);
  } else {
    const auto& f = artifact.learned();
    model.tag(f.model->tag());
    f.model->serialize(model);
    f.bounds.serialize(bounds);
  }
  out.section(model);
  out.section(bounds);

  ByteWriter fp;
  fp.u64(artifact.fingerprint);
  fp.u64(static_cast<std::uint64_t>(artifact.n));
  fp.u64(static_cast<std::uint64_t>(artifact.dim));
  fp.u8(static_cast<std::uint8_t>(artifact.metric));
  fp.u64(static_cast<std::uint64_t>(artifact.k_max));
  out.section(fp);
  return out.take();
}

IndexArtifact deserialize_index(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes);
  check_header(in);
  IndexArtifact a;

  ByteReader zs = in.section();
  const Index d = read_pair_length(zs);
  a.zscore.mean = read_vector(zs, d);
  a.zscore.std = read_vector(zs, d);

  ByteReader kn = in.section();
  const Index k = read_pair_length(kn);
  a.kdist_norm.min = read_vector(kn, k);
  a.kdist_norm.max = read_vector(kn, k);

  ByteReader model = in.section();
  const std::string tag = model.tag();
  ByteReader bounds = in.section();
  if (tag == "COP1") {
    a.filter = CopModel::deserialize(model);
    model.expect_done("model");
    bounds.expect_done("bounds");
  } else {
    std::shared_ptr<const KDistModel> m = deserialize_model(tag, model);
    model.expect_done("model");
    BoundSet set = BoundSet::deserialize(bounds);
    bounds.expect_done("bounds");
    a.filter = LearnedFilter{std::move(m), std::move(set)};
  }

  ByteReader fp = in.section();
  a.fingerprint = fp.u64();
  a.n = static_cast<Index>(fp.u64());
  a.dim = static_cast<Index>(fp.u64());
  const std::uint8_t metric = fp.u8();
  if (metric > static_cast<std::uint8_t>(Metric::Manhattan)) throw CorruptArtifact("unknown metric");
  a.metric = static_cast<Metric>(metric);
  a.k_max = static_cast<Index>(fp.u64());
  fp.expect_done("fingerprint");
  in.expect_done("index");

  if (a.is_baseline()) {
    const CopModel& cop = a.baseline();
    if (cop.size() != a.n || cop.k_max != a.k_max) throw CorruptArtifact("baseline does not match fingerprint");
  } else {
    const auto& f = a.learned();
    if (d != a.dim || k != a.k_max || f.model->input_dim() != a.dim || f.model->k_max() != a.k_max ||
        f.bounds.k_max != a.k_max ||
        (f.bounds.mode != Aggregation::OverPoints && f.bounds.p_lower.size() != a.n)) {
      throw CorruptArtifact("index sections disagree in shape");
    }
  }
  return a;
}

void save_index(const IndexArtifact& artifact, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_index(artifact));
}

IndexArtifact load_index(const std::filesystem::path& path) { return deserialize_index(read_file_bytes(path)); }

IndexLayout inspect_index(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes);
  check_header(in);
  IndexLayout layout;

  ByteReader zs = in.section();
  layout.zscore_scalars = 2 * read_pair_length(zs);
  ByteReader kn = in.section();
  layout.kdist_norm_scalars = 2 * read_pair_length(kn);

  ByteReader model = in.section();
  layout.model_tag = model.tag();
  model.section();  // hyperparameters
  ByteReader params = model.section();
  const std::uint8_t width = params.u8();
  const std::uint64_t count = params.u64();
  if ((width != 4 && width != 8) || params.remaining() != count * width) {
    throw CorruptArtifact("parameter block length mismatch");
  }
  layout.model_scalars = static_cast<Index>(count);

  ByteReader bounds = in.section();
  if (!bounds.done()) {
    bounds.u8();
    bounds.u8();
    bounds.u64();
    for (int i = 0; i < 4; ++i) {
      const std::uint64_t len = bounds.u64();
      if (len > bounds.remaining() / 8) throw CorruptArtifact("bound vector length exceeds section");
      for (std::uint64_t j = 0; j < len; ++j) bounds.f64();
      layout.bound_scalars += static_cast<Index>(len);
    }
  }
  return layout;
}

}  // namespace lkd
