#include "cathseg/nn/tensor.hpp"

namespace cathseg::nn {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
}

}  // namespace cathseg::nn
