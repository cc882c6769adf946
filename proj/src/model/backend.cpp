#include "ogb/model/backend.hpp"

#include "ogb/errors.hpp"

namespace ogb::model {

const char* to_string(ParamClass c) {
  switch (c) {
    case ParamClass::LayerNorm: return "layer_norm";
    case ParamClass::PositionalEmbedding: return "positional_embeddings";
    case ParamClass::WordEmbedding: return "word_embeddings";
    case ParamClass::Other: return "other";
    case ParamClass::Unclassified: return "unclassified";
  }
  return "?";
}

const std::vector<double>& MaskedScores::at(std::size_t position) const {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] == position) return probs[i];
  }
  raise(ErrorKind::BackendFailure,
        "no distribution returned for masked position " +
            std::to_string(position));
}

}  // namespace ogb::model
