#pragma once

#include "choreo/autodiff.hpp"

#include <string>
#include <vector>

namespace choreo {

/// y = x W + b with W stored in x out.
struct Linear {
    ad::Var w;
    ad::Var b;

    static Linear zeros(int in, int out);
    /// Weights ~ U(-1/sqrt(in), 1/sqrt(in)), bias zero.
    static Linear uniform(int in, int out, Rng& rng);

    ad::Var operator()(const ad::Var& x) const { return ad::affine(x, w, b); }
    int in() const { return static_cast<int>(w.rows()); }
    int out() const { return static_cast<int>(w.cols()); }
};

/// A trainable tensor with its checkpoint name and reporting group.
struct NamedParam {
    std::string name;
    std::string group;
    ad::Var* var;
};

void append(std::vector<NamedParam>& out, const std::string& name, const std::string& group, Linear& lin);

}  // namespace choreo
