#pragma once

#include "laae/nn.hpp"
#include "laae/tape.hpp"

namespace laae {

// Scalar objective with its named breakdown. The components sum to the
// total, so `kl` carries the beta-weighted KL contribution.
struct LossValue {
  NodeId total;
  double bce;
  double kl;
};

// mean over all elements of (recon - target)^2
NodeId mse(Tape& tape, NodeId recon, NodeId target);

// per-element -[t ln p + (1-t) ln(1-p)], summed over non-batch dims, averaged
// over the batch; p clamped to [1e-7, 1-1e-7] before the logs
NodeId bce(Tape& tape, NodeId recon, NodeId target);

// KL(N(mu, diag(exp(logvar))) || N(0, I)): per sample
// -0.5 * sum_z (1 + logvar - mu^2 - exp(logvar)), averaged over the batch
NodeId kl_gauss(Tape& tape, const LatentStats& stats);

// total = bce + beta * kl, with the components recorded separately
LossValue cvae_loss(Tape& tape, NodeId recon, NodeId target, const LatentStats& stats,
                    double beta);

constexpr double kBceClamp = 1e-7;

}  // namespace laae
