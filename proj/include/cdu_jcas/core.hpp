// SPDX-License-Identifier: Apache-2.0
//
// Shared value types for the CDU JCAS link-level simulator: complex alias,
// physical constants, 3-vectors, error classes and the (subcarrier, symbol)
// grids every stage of the pipeline passes around.

#ifndef CDU_JCAS_CORE_HPP
#define CDU_JCAS_CORE_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdu
{
    using cplx = std::complex<double>;

    // Propagation speed used for delays and for the range inversion formula.
    // 3e8 m/s keeps lambda = 4.7619 mm at 63 GHz and the 4.8828 m range bin.
    inline constexpr double speed_of_light = 3.0e8;
    inline constexpr double boltzmann = 1.380649e-23;
    inline constexpr double pi = std::numbers::pi;

    // ---------------------------------------------------------------- errors

    // Argument outside the mathematical domain of an operation (bad index, order, power...)
    class InputDomainError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    class DimensionMismatchError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Two scene objects share a position, so no angle or path loss exists
    class DegenerateGeometryError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Zero channel estimate or vanishing equalizer gain
    class SingularChannelError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // --------------------------------------------------------------- vectors

    struct Vec3
    {
        double x = 0.0;
        double y = 0.0;
        double z = 0.0;

        friend Vec3 operator-(const Vec3 &a, const Vec3 &b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
        friend Vec3 operator+(const Vec3 &a, const Vec3 &b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
        friend Vec3 operator*(double s, const Vec3 &a) { return {s * a.x, s * a.y, s * a.z}; }
        friend bool operator==(const Vec3 &, const Vec3 &) = default;

        double dot(const Vec3 &o) const { return x * o.x + y * o.y + z * o.z; }
        double norm() const { return std::sqrt(dot(*this)); }
        bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
    };

    inline double distance(const Vec3 &a, const Vec3 &b) { return (a - b).norm(); }

    // ----------------------------------------------------------------- grids

    // Dense N_c x M_s grid of scalars, subcarrier-major: element (n, m) at n * M_s + m.
    template <typename T>
    class Grid
    {
    public:
        Grid() = default;
        Grid(std::size_t subcarriers, std::size_t symbols, T fill = T{})
            : subcarriers_(subcarriers), symbols_(symbols), values_(subcarriers * symbols, fill) {}

        std::size_t subcarriers() const { return subcarriers_; }
        std::size_t symbols() const { return symbols_; }
        std::size_t size() const { return values_.size(); }
        bool empty() const { return values_.empty(); }

        T &operator()(std::size_t n, std::size_t m) { return values_[n * symbols_ + m]; }
        const T &operator()(std::size_t n, std::size_t m) const { return values_[n * symbols_ + m]; }

        std::span<T> values() { return values_; }
        std::span<const T> values() const { return values_; }

        bool same_shape(const Grid &o) const { return subcarriers_ == o.subcarriers_ && symbols_ == o.symbols_; }
        friend bool operator==(const Grid &, const Grid &) = default;

    private:
        std::size_t subcarriers_ = 0;
        std::size_t symbols_ = 0;
        std::vector<T> values_;
    };

    // N_c x M_s grid whose cells are complex vectors of a fixed length (one entry per BS antenna).
    class VectorGrid
    {
    public:
        VectorGrid() = default;
        VectorGrid(std::size_t subcarriers, std::size_t symbols, std::size_t dim)
            : subcarriers_(subcarriers), symbols_(symbols), dim_(dim), values_(subcarriers * symbols * dim) {}

        std::size_t subcarriers() const { return subcarriers_; }
        std::size_t symbols() const { return symbols_; }
        std::size_t dim() const { return dim_; }

        std::span<cplx> at(std::size_t n, std::size_t m) { return {values_.data() + (n * symbols_ + m) * dim_, dim_}; }
        std::span<const cplx> at(std::size_t n, std::size_t m) const { return {values_.data() + (n * symbols_ + m) * dim_, dim_}; }

        std::span<cplx> values() { return values_; }
        std::span<const cplx> values() const { return values_; }

        bool same_shape(const VectorGrid &o) const
        {
            return subcarriers_ == o.subcarriers_ && symbols_ == o.symbols_ && dim_ == o.dim_;
        }

        VectorGrid &operator+=(const VectorGrid &o)
        {
            if (!same_shape(o))
                throw DimensionMismatchError("VectorGrid::operator+=: shape mismatch");
            for (std::size_t i = 0; i < values_.size(); ++i)
                values_[i] += o.values_[i];
            return *this;
        }

        friend bool operator==(const VectorGrid &, const VectorGrid &) = default;

    private:
        std::size_t subcarriers_ = 0;
        std::size_t symbols_ = 0;
        std::size_t dim_ = 0;
        std::vector<cplx> values_;
    };

    // Post-beamforming channel responses h_{n,m} (one vector per cell)
    using ChannelGrid = VectorGrid;
    // Received per-antenna samples y_{n,m}
    using ObservationGrid = VectorGrid;
    // Scalar echo response estimates, one per cell
    using EchoResponseGrid = Grid<cplx>;

    // x^T y (no conjugation)
    inline cplx dot_transpose(std::span<const cplx> x, std::span<const cplx> y)
    {
        if (x.size() != y.size())
            throw DimensionMismatchError("dot_transpose: length mismatch");
        cplx acc{0.0, 0.0};
        for (std::size_t i = 0; i < x.size(); ++i)
            acc += x[i] * y[i];
        return acc;
    }

    // x^H y
    inline cplx dot_hermitian(std::span<const cplx> x, std::span<const cplx> y)
    {
        if (x.size() != y.size())
            throw DimensionMismatchError("dot_hermitian: length mismatch");
        cplx acc{0.0, 0.0};
        for (std::size_t i = 0; i < x.size(); ++i)
            acc += std::conj(x[i]) * y[i];
        return acc;
    }

    inline double squared_norm(std::span<const cplx> x)
    {
        double acc = 0.0;
        for (const auto &v : x)
            acc += std::norm(v);
        return acc;
    }

    inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

} // namespace cdu

#endif
