#include "stepprune/classifier.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace stepprune::classifier {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'E', 'Q'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(buf, bits);
}

class Reader {
public:
  Reader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  void raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == data_.size(); }

private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size())
      throw FormatError("load_model: truncated model file: " + path_);
  }

  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::uint32_t flags_of(const FeatureConfig& c) {
  std::uint32_t f = 0;
  if (c.use_union) f |= 1u;
  if (c.use_intersection) f |= 2u;
  if (c.use_symmetric_diff) f |= 4u;
  if (c.use_ratio_bucket) f |= 8u;
  return f;
}

}  // namespace

void save_model(const ClassifierModel& model, const std::string& path) {
  if (model.theta.size() != model.feature_config.hash_dim + 1)
    throw ContractViolation("save_model: theta length does not match hash_dim+1");

  std::string buf;
  buf.reserve(16 + model.theta.size() * 8);
  buf.append(kMagic, 4);
  put_u32(buf, model.version);
  put_u32(buf, static_cast<std::uint32_t>(model.feature_config.char_ngram_min));
  put_u32(buf, static_cast<std::uint32_t>(model.feature_config.char_ngram_max));
  put_u32(buf, static_cast<std::uint32_t>(model.feature_config.word_ngram_min));
  put_u32(buf, static_cast<std::uint32_t>(model.feature_config.word_ngram_max));
  put_u32(buf, model.feature_config.hash_dim);
  put_u32(buf, flags_of(model.feature_config));
  put_f64(buf, model.decision_threshold);
  put_u64(buf, model.theta.size());
  for (double w : model.theta) put_f64(buf, w);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("save_model: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("save_model: write failed for " + path);
}

ClassifierModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_model: cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  Reader r(data, path);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("load_model: bad magic in " + path);

  ClassifierModel model;
  model.version = r.u32();
  if (model.version != kModelFormatVersion) {
    throw FormatError("load_model: format version mismatch: expected " +
                      std::to_string(kModelFormatVersion) + ", found " +
                      std::to_string(model.version));
  }
  model.feature_config.char_ngram_min = static_cast<int>(r.u32());
  model.feature_config.char_ngram_max = static_cast<int>(r.u32());
  model.feature_config.word_ngram_min = static_cast<int>(r.u32());
  model.feature_config.word_ngram_max = static_cast<int>(r.u32());
  model.feature_config.hash_dim = r.u32();
  std::uint32_t flags = r.u32();
  model.feature_config.use_union = (flags & 1u) != 0;
  model.feature_config.use_intersection = (flags & 2u) != 0;
  model.feature_config.use_symmetric_diff = (flags & 4u) != 0;
  model.feature_config.use_ratio_bucket = (flags & 8u) != 0;
  model.decision_threshold = r.f64();

  std::uint64_t count = r.u64();
  if (count != static_cast<std::uint64_t>(model.feature_config.hash_dim) + 1)
    throw FormatError("load_model: weight count does not match hash_dim+1 in " +
                      path);
  model.theta.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) model.theta[i] = r.f64();
  if (!r.done())
    throw FormatError("load_model: trailing bytes in " + path);
  model.feature_config.validate();
  return model;
}

}  // namespace stepprune::classifier
