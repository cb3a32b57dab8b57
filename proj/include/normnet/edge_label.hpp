#pragma once

#include <stdexcept>

namespace normnet {

enum class EdgeLabel { Convex = 0, Concave = 1, Occlusion = 2, NoEdge = 3 };

inline char edge_char(EdgeLabel e) {
  switch (e) {
    case EdgeLabel::Convex: return 'C';
    case EdgeLabel::Concave: return 'V';
    case EdgeLabel::Occlusion: return 'O';
    case EdgeLabel::NoEdge: return 'N';
  }
  throw std::logic_error("bad edge label");
}

inline EdgeLabel edge_from_char(char c) {
  switch (c) {
    case 'C': return EdgeLabel::Convex;
    case 'V': return EdgeLabel::Concave;
    case 'O': return EdgeLabel::Occlusion;
    case 'N': return EdgeLabel::NoEdge;
  }
  throw std::invalid_argument("bad edge label character");
}

}  // namespace normnet
