#include "occlusion/flow.hpp"

#include "occlusion/color.hpp"
#include "occlusion/error.hpp"
#include "occlusion/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace occlusion {
namespace {

PlaneD downsample(const PlaneD& in) {
  const auto h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  const int nh = (h + 1) / 2, nw = (w + 1) / 2;
  PlaneD out(nh, nw);
  for (int y = 0; y < nh; ++y) {
    for (int x = 0; x < nw; ++x) {
      const int y0 = 2 * y, x0 = 2 * x;
      const int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
      out(y, x) = 0.25 * (in(y0, x0) + in(y0, x1) + in(y1, x0) + in(y1, x1));
    }
  }
  return out;
}

PlaneD upsample_flow(const PlaneD& coarse, int h, int w) {
  PlaneD out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(y, x) = 2.0 * sample_bilinear(coarse, (x + 0.5) / 2.0 - 0.5, (y + 0.5) / 2.0 - 0.5);
  return out;
}

void gradients(const PlaneD& img, PlaneD& gx, PlaneD& gy) {
  const auto h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  gx.resize(h, w);
  gy.resize(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gx(y, x) = 0.5 * (img(y, std::min(x + 1, w - 1)) - img(y, std::max(x - 1, 0)));
      gy(y, x) = 0.5 * (img(std::min(y + 1, h - 1), x) - img(std::max(y - 1, 0), x));
    }
  }
}

struct Linearization {
  PlaneD ix, iy, it;  // it already absorbs the current flow: it - ix*u - iy*v
};

double energy(const Linearization& lin, const PlaneD& u, const PlaneD& v, double alpha2) {
  const auto h = static_cast<int>(u.rows()), w = static_cast<int>(u.cols());
  const double data = (lin.ix * u + lin.iy * v + lin.it).square().sum();
  double smooth = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) smooth += std::pow(u(y, x + 1) - u(y, x), 2) + std::pow(v(y, x + 1) - v(y, x), 2);
      if (y + 1 < h) smooth += std::pow(u(y + 1, x) - u(y, x), 2) + std::pow(v(y + 1, x) - v(y, x), 2);
    }
  }
  return data + alpha2 * smooth;
}

// One block-Jacobi sweep of the Horn-Schunck normal equations; each pixel's
// 2x2 system is solved exactly given its neighbours' previous values.
void jacobi_sweep(const Linearization& lin, const PlaneD& u, const PlaneD& v, PlaneD& nu, PlaneD& nv,
                  double alpha2) {
  const auto h = static_cast<int>(u.rows()), w = static_cast<int>(u.cols());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double su = 0.0, sv = 0.0;
      int d = 0;
      auto add = [&](int yy, int xx) {
        su += u(yy, xx);
        sv += v(yy, xx);
        ++d;
      };
      if (x > 0) add(y, x - 1);
      if (x + 1 < w) add(y, x + 1);
      if (y > 0) add(y - 1, x);
      if (y + 1 < h) add(y + 1, x);
      const double gx = lin.ix(y, x), gy = lin.iy(y, x), gt = lin.it(y, x);
      const double a11 = gx * gx + alpha2 * d;
      const double a22 = gy * gy + alpha2 * d;
      const double a12 = gx * gy;
      const double r1 = alpha2 * su - gx * gt;
      const double r2 = alpha2 * sv - gy * gt;
      const double det = a11 * a22 - a12 * a12;
      nu(y, x) = (a22 * r1 - a12 * r2) / det;
      nv(y, x) = (a11 * r2 - a12 * r1) / det;
    }
  }
}

}  // namespace

void FlowParams::validate() const {
  if (!(alpha > 0.0) || iterations <= 0 || levels <= 0 || warps <= 0)
    throw ParameterError("flow parameters must all be positive");
}

FlowField estimate_flow(const PlaneD& first, const PlaneD& second, const FlowParams& params, FlowTrace* trace) {
  params.validate();
  if (first.rows() != second.rows() || first.cols() != second.cols())
    throw ValidationError("estimate_flow: frame dimension mismatch");
  if (first.size() == 0) throw ValidationError("estimate_flow: empty frames");

  std::vector<PlaneD> pyr0{first}, pyr1{second};
  while (static_cast<int>(pyr0.size()) < params.levels && pyr0.back().rows() >= 8 && pyr0.back().cols() >= 8) {
    pyr0.push_back(downsample(pyr0.back()));
    pyr1.push_back(downsample(pyr1.back()));
  }
  const double alpha2 = params.alpha * params.alpha;
  if (trace) trace->finest_level_energy.clear();

  PlaneD u = PlaneD::Zero(pyr0.back().rows(), pyr0.back().cols());
  PlaneD v = u;
  for (int level = static_cast<int>(pyr0.size()) - 1; level >= 0; --level) {
    const PlaneD& i0 = pyr0[static_cast<std::size_t>(level)];
    const PlaneD& i1 = pyr1[static_cast<std::size_t>(level)];
    const auto h = static_cast<int>(i0.rows()), w = static_cast<int>(i0.cols());
    if (u.rows() != h || u.cols() != w) {
      u = upsample_flow(u, h, w);
      v = upsample_flow(v, h, w);
    }
    PlaneD gx0, gy0;
    gradients(i0, gx0, gy0);
    for (int warp = 0; warp < params.warps; ++warp) {
      PlaneD warped(h, w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) warped(y, x) = sample_bilinear(i1, x + u(y, x), y + v(y, x));
      PlaneD gx1, gy1;
      gradients(warped, gx1, gy1);
      Linearization lin;
      lin.ix = 0.5 * (gx0 + gx1);
      lin.iy = 0.5 * (gy0 + gy1);
      lin.it = (warped - i0) - lin.ix * u - lin.iy * v;

      const bool record = trace && level == 0;
      std::vector<double> energies;
      if (record) energies.push_back(energy(lin, u, v, alpha2));
      PlaneD nu(h, w), nv(h, w);
      for (int it = 0; it < params.iterations; ++it) {
        jacobi_sweep(lin, u, v, nu, nv, alpha2);
        u.swap(nu);
        v.swap(nv);
        if (record) energies.push_back(energy(lin, u, v, alpha2));
      }
      if (record) trace->finest_level_energy.push_back(std::move(energies));
    }
  }
  if (!u.allFinite() || !v.allFinite()) throw NumericalError("estimate_flow: non-finite flow");

  FlowField out(static_cast<int>(first.cols()), static_cast<int>(first.rows()), FlowDirection::forward);
  out.u = u.cast<float>();
  out.v = v.cast<float>();
  return out;
}

FlowPair estimate_sequence_flow(const FrameSequence& frames, const FlowParams& params, int threads) {
  frames.validate();
  const std::size_t pairs = static_cast<std::size_t>(frames.size() - 1);
  std::vector<PlaneD> gray(static_cast<std::size_t>(frames.size()));
  for (int t = 0; t < frames.size(); ++t) gray[static_cast<std::size_t>(t)] = luma(frames[t]);
  FlowPair out;
  out.forward.resize(pairs);
  out.backward.resize(pairs);
  parallel_for(2 * pairs, threads, [&](std::size_t job) {
    const std::size_t t = job / 2;
    if (job % 2 == 0) {
      out.forward[t] = estimate_flow(gray[t], gray[t + 1], params);
    } else {
      out.backward[t] = estimate_flow(gray[t + 1], gray[t], params);
      out.backward[t].direction = FlowDirection::backward;
    }
  });
  return out;
}

}  // namespace occlusion
