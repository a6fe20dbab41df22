#ifndef FDRELAY_BINOMIAL_HPP
#define FDRELAY_BINOMIAL_HPP

#include <cmath>
#include <vector>

namespace fdrelay {

// Pascal's triangle up to a fixed order; exact in double for order <= 56.
class Binomial {
public:
  explicit Binomial(int order) : order_(order), table_((order + 1) * (order + 1), 0.0) {
    for (int n = 0; n <= order; ++n) {
      at(n, 0) = 1.0;
      for (int k = 1; k <= n; ++k) at(n, k) = at(n - 1, k - 1) + (k <= n - 1 ? at(n - 1, k) : 0.0);
    }
  }

  double choose(int n, int k) const {
    if (k < 0 || k > n || n > order_) return 0.0;
    return table_[static_cast<std::size_t>(n * (order_ + 1) + k)];
  }

  // P(Binomial(n, p) = k)
  double pmf(int n, int k, double p) const {
    return choose(n, k) * std::pow(p, k) * std::pow(1.0 - p, n - k);
  }

private:
  double& at(int n, int k) { return table_[static_cast<std::size_t>(n * (order_ + 1) + k)]; }

  int order_;
  std::vector<double> table_;
};

}  // namespace fdrelay

#endif  // FDRELAY_BINOMIAL_HPP
