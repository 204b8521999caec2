#include "protoid/parameters.hpp"

#include "protoid/error.hpp"

namespace protoid {

Index ParameterLayout::add(std::string name, Index rows, Index cols) {
  require(rows >= 0 && cols >= 0, ErrorKind::ShapeError, "negative tensor shape for " + name);
  require(find(name) < 0, ErrorKind::ShapeError, "duplicate tensor name " + name);
  slots_.push_back(TensorSlot{std::move(name), rows, cols, total_});
  total_ += rows * cols;
  return static_cast<Index>(slots_.size()) - 1;
}

Index ParameterLayout::find(const std::string& name) const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].name == name) return static_cast<Index>(i);
  }
  return -1;
}

}  // namespace protoid
