#pragma once

#include <stdexcept>

namespace srrl {

// Conditioning token: either a class id in [0, cond_count) or the null token.
// A class embeds as its one-hot over cond_count slots; the null token embeds
// as all zeros, so it can never collide with a class embedding.
class Condition {
 public:
  static Condition cls(int id) {
    if (id < 0) throw std::invalid_argument("class id must be non-negative");
    return Condition(id);
  }
  static Condition null_token() { return Condition(-1); }

  bool is_null() const { return id_ < 0; }

  int class_id() const {
    if (is_null()) throw std::logic_error("null condition carries no class id");
    return id_;
  }

  // Writes the embedding into dst[0..cond_count).
  void embed_into(double* dst, int cond_count) const {
    for (int i = 0; i < cond_count; ++i) dst[i] = 0.0;
    if (!is_null()) {
      if (id_ >= cond_count) throw std::invalid_argument("class id out of range");
      dst[id_] = 1.0;
    }
  }

  bool operator==(const Condition&) const = default;

 private:
  explicit Condition(int id) : id_(id) {}
  int id_;
};

}  // namespace srrl
