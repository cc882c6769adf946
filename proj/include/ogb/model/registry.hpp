#pragma once

#include <functional>
#include <memory>
#include <string>

#include "ogb/model/backend.hpp"

namespace ogb::model {

// Backend ids:
//   uniform            uniform mock, default vocab size 32
//   uniform:<V>        uniform mock over vocab size V
//   tiny:<path>        TinyEncoder checkpoint at <path>
// Additional schemes can be registered (tests use this for counting stubs).
using BackendFactory =
    std::function<std::unique_ptr<MaskedModelBackend>(const std::string& arg)>;

void register_backend_scheme(const std::string& scheme, BackendFactory factory);

std::unique_ptr<MaskedModelBackend> create_backend(const std::string& id);

// Stable identity of the model behind `id`, without constructing it:
// checkpoint file digest for tiny:, digest of the id string otherwise.
std::string backend_digest(const std::string& id);

}  // namespace ogb::model
