#ifndef DROD_TAPE_HPP
#define DROD_TAPE_HPP

#include <cassert>
#include <cmath>
#include <vector>

// Minimal reverse-mode scalar tape.
//
// The tape is templated on its arithmetic type S. With S = double a backward
// sweep yields plain first derivatives. With S = Dual (forward-mode pairs)
// the same sweep propagates a directional derivative through both the primal
// and the adjoint arithmetic, so the dual part of an input adjoint is a
// Hessian-vector product of the taped scalar. That composition is all the
// second-order information the simulator ever needs.

namespace drod::ad {

struct Dual {
    double v = 0.0;
    double d = 0.0;
    Dual() = default;
    Dual(double value) : v(value) {}
    Dual(double value, double dot) : v(value), d(dot) {}

    Dual &operator+=(const Dual &o) { v += o.v; d += o.d; return *this; }
    Dual &operator-=(const Dual &o) { v -= o.v; d -= o.d; return *this; }
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
    const double inv = 1.0 / b.v;
    return {a.v * inv, (a.d - a.v * inv * b.d) * inv};
}
inline Dual sqrt(Dual a) {
    const double s = std::sqrt(a.v);
    return {s, 0.5 * a.d / s};
}
inline Dual sin(Dual a) { return {std::sin(a.v), a.d * std::cos(a.v)}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -a.d * std::sin(a.v)}; }
inline Dual atan2(Dual y, Dual x) {
    const double den = x.v * x.v + y.v * y.v;
    return {std::atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / den};
}
inline bool operator<(Dual a, Dual b) { return a.v < b.v; }
inline bool operator>(Dual a, Dual b) { return a.v > b.v; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual &x) { return x.v; }

template <class S>
class Tape {
  public:
    // Parents and cached local partials d(out)/d(parent).
    struct Node {
        int a = -1;
        int b = -1;
        S pa{};
        S pb{};
    };

    void clear() {
        values_.clear();
        nodes_.clear();
    }
    void reserve(size_t n) {
        values_.reserve(n);
        nodes_.reserve(n);
    }
    int size() const { return static_cast<int>(values_.size()); }

    int leaf(S v) {
        values_.push_back(v);
        nodes_.push_back(Node{});
        return size() - 1;
    }
    int unary(int a, S v, S pa) {
        values_.push_back(v);
        nodes_.push_back(Node{a, -1, pa, S{}});
        return size() - 1;
    }
    int binary(int a, int b, S v, S pa, S pb) {
        values_.push_back(v);
        nodes_.push_back(Node{a, b, pa, pb});
        return size() - 1;
    }

    const S &value(int i) const { return values_[i]; }

    // Adjoints of every node with respect to `out`, seeded with `seed`.
    void backward(int out, std::vector<S> &adj, S seed = S(1.0)) const {
        adj.assign(values_.size(), S(0.0));
        adj[out] = seed;
        for (int k = out; k >= 0; --k) {
            const Node &nd = nodes_[k];
            if (nd.a < 0) continue;
            const S &g = adj[k];
            adj[nd.a] += g * nd.pa;
            if (nd.b >= 0) adj[nd.b] += g * nd.pb;
        }
    }

  private:
    std::vector<S> values_;
    std::vector<Node> nodes_;
};

// Handle to one tape value. Arithmetic on handles records nodes.
template <class S>
struct Rev {
    Tape<S> *tape = nullptr;
    int idx = -1;

    Rev() = default;
    Rev(Tape<S> *t, int i) : tape(t), idx(i) {}
    const S &val() const { return tape->value(idx); }
};

template <class S>
inline Rev<S> make_input(Tape<S> &t, S v) { return {&t, t.leaf(v)}; }

template <class S>
inline Rev<S> make_const(Tape<S> &t, double v) { return {&t, t.leaf(S(v))}; }

template <class S>
inline double value_of(const Rev<S> &x) { return value_of(x.val()); }

template <class S>
inline Rev<S> operator+(Rev<S> a, Rev<S> b) {
    return {a.tape, a.tape->binary(a.idx, b.idx, a.val() + b.val(), S(1.0), S(1.0))};
}
template <class S>
inline Rev<S> operator-(Rev<S> a, Rev<S> b) {
    return {a.tape, a.tape->binary(a.idx, b.idx, a.val() - b.val(), S(1.0), S(-1.0))};
}
template <class S>
inline Rev<S> operator-(Rev<S> a) {
    return {a.tape, a.tape->unary(a.idx, -a.val(), S(-1.0))};
}
template <class S>
inline Rev<S> operator*(Rev<S> a, Rev<S> b) {
    return {a.tape, a.tape->binary(a.idx, b.idx, a.val() * b.val(), b.val(), a.val())};
}
template <class S>
inline Rev<S> operator/(Rev<S> a, Rev<S> b) {
    const S inv = S(1.0) / b.val();
    const S v = a.val() * inv;
    return {a.tape, a.tape->binary(a.idx, b.idx, v, inv, -v * inv)};
}

template <class S>
inline Rev<S> operator+(Rev<S> a, double c) {
    return {a.tape, a.tape->unary(a.idx, a.val() + S(c), S(1.0))};
}
template <class S>
inline Rev<S> operator+(double c, Rev<S> a) { return a + c; }
template <class S>
inline Rev<S> operator-(Rev<S> a, double c) { return a + (-c); }
template <class S>
inline Rev<S> operator-(double c, Rev<S> a) {
    return {a.tape, a.tape->unary(a.idx, S(c) - a.val(), S(-1.0))};
}
template <class S>
inline Rev<S> operator*(Rev<S> a, double c) {
    return {a.tape, a.tape->unary(a.idx, a.val() * S(c), S(c))};
}
template <class S>
inline Rev<S> operator*(double c, Rev<S> a) { return a * c; }
template <class S>
inline Rev<S> operator/(Rev<S> a, double c) { return a * (1.0 / c); }
template <class S>
inline Rev<S> operator/(double c, Rev<S> a) {
    using std::sqrt;
    const S inv = S(1.0) / a.val();
    const S v = S(c) * inv;
    return {a.tape, a.tape->unary(a.idx, v, -v * inv)};
}

template <class S>
inline Rev<S> sqrt(Rev<S> a) {
    using std::sqrt;
    const S s = sqrt(a.val());
    return {a.tape, a.tape->unary(a.idx, s, S(0.5) / s)};
}
template <class S>
inline Rev<S> sin(Rev<S> a) {
    using std::sin;
    using std::cos;
    return {a.tape, a.tape->unary(a.idx, sin(a.val()), cos(a.val()))};
}
template <class S>
inline Rev<S> cos(Rev<S> a) {
    using std::sin;
    using std::cos;
    return {a.tape, a.tape->unary(a.idx, cos(a.val()), -sin(a.val()))};
}
template <class S>
inline Rev<S> atan2(Rev<S> y, Rev<S> x) {
    using std::atan2;
    const S den = x.val() * x.val() + y.val() * y.val();
    const S v = atan2(y.val(), x.val());
    return {y.tape, y.tape->binary(y.idx, x.idx, v, x.val() / den, -y.val() / den)};
}

} // namespace drod::ad

#endif
