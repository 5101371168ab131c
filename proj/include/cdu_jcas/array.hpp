// SPDX-License-Identifier: Apache-2.0
//
// Uniform planar array (UPA) geometry, steering vectors and least-squares
// beamformers.
//
// Element ordering: the steering vector stacks element (p, q) at index
// p * Q + q, i.e. row-major with p the outer index. Element (0, 0) is the
// phase reference and always equals 1.

#ifndef CDU_JCAS_ARRAY_HPP
#define CDU_JCAS_ARRAY_HPP

#include "core.hpp"

#include <string>
#include <vector>

namespace cdu
{
    // 2D direction: azimuth in [-pi, pi), elevation (angle off the array normal) in [0, pi]
    struct Angle2D
    {
        double azimuth_rad = 0.0;
        double elevation_rad = 0.0;

        // Wraps azimuth into [-pi, pi). Elevation must already lie in [0, pi].
        static Angle2D make(double azimuth_rad, double elevation_rad)
        {
            if (!std::isfinite(azimuth_rad) || !std::isfinite(elevation_rad))
                throw InputDomainError("Angle2D: non-finite angle");
            if (elevation_rad < 0.0 || elevation_rad > pi)
                throw InputDomainError("Angle2D: elevation outside [0, pi]");
            double az = std::remainder(azimuth_rad, 2.0 * pi); // [-pi, pi]
            if (az >= pi)
                az -= 2.0 * pi;
            return {az, elevation_rad};
        }

        friend bool operator==(const Angle2D &, const Angle2D &) = default;
    };

    struct ArrayGeometry
    {
        std::size_t rows = 1; // P
        std::size_t cols = 1; // Q
        double element_spacing_m = 0.0;
        double wavelength_m = 0.0;

        static ArrayGeometry half_wavelength(std::size_t rows, std::size_t cols, double wavelength_m)
        {
            ArrayGeometry g{rows, cols, 0.5 * wavelength_m, wavelength_m};
            g.validate();
            return g;
        }

        std::size_t size() const { return rows * cols; }

        void validate() const
        {
            if (rows == 0 || cols == 0)
                throw InputDomainError("ArrayGeometry: rows and cols must be positive");
            if (!(element_spacing_m > 0.0) || !std::isfinite(element_spacing_m))
                throw InputDomainError("ArrayGeometry: element spacing must be positive");
            if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m))
                throw InputDomainError("ArrayGeometry: wavelength must be positive");
        }
    };

    using SteeringVector = std::vector<cplx>;

    // Phase of element (p, q) relative to element (0, 0) for a far-field direction.
    inline cplx steering_element(const ArrayGeometry &geom, const Angle2D &angle, std::size_t p, std::size_t q)
    {
        if (p >= geom.rows || q >= geom.cols)
            throw InputDomainError("steering_element: element index (" + std::to_string(p) + ", " +
                                   std::to_string(q) + ") outside " + std::to_string(geom.rows) + "x" +
                                   std::to_string(geom.cols) + " array");
        const double k = 2.0 * pi / geom.wavelength_m * geom.element_spacing_m;
        const double sin_el = std::sin(angle.elevation_rad);
        const double u = std::cos(angle.azimuth_rad) * sin_el;
        const double v = std::sin(angle.azimuth_rad) * sin_el;
        const double phase = -k * (static_cast<double>(p) * u + static_cast<double>(q) * v);
        return std::polar(1.0, phase);
    }

    inline SteeringVector steering_vector(const ArrayGeometry &geom, const Angle2D &angle)
    {
        geom.validate();
        SteeringVector a;
        a.reserve(geom.size());
        for (std::size_t p = 0; p < geom.rows; ++p)
            for (std::size_t q = 0; q < geom.cols; ++q)
                a.push_back(steering_element(geom, angle, p, q));
        return a;
    }

    // matched:        w = c0 * conj(a) / (PQ)   ->  a^T w = c0 at the pointed direction
    // pseudo_inverse: w = c0 * pinv(a^H) = c0 * a / (PQ), the literal LS formula; its
    //                 gain a^T w = c0 * a^T a / (PQ) is below 1 off boresight
    enum class BeamFormula
    {
        matched,
        pseudo_inverse,
    };

    // unit_gain:  weights as above (|w|^2 = 1/PQ)
    // unit_power: weights rescaled to |w| = 1, so the radiated power equals the input power
    //             and the pointed-direction gain becomes sqrt(PQ) * c0
    enum class BeamNormalization
    {
        unit_gain,
        unit_power,
    };

    struct Beamformer
    {
        std::vector<cplx> weights;
        Angle2D pointed_direction;
        cplx phase_factor{1.0, 0.0};
    };

    inline Beamformer ls_transmit_beamformer(const ArrayGeometry &geom, const Angle2D &direction,
                                             cplx c0 = {1.0, 0.0},
                                             BeamFormula formula = BeamFormula::matched,
                                             BeamNormalization normalization = BeamNormalization::unit_gain)
    {
        if (std::abs(std::abs(c0) - 1.0) > 1e-9)
            throw InputDomainError("ls_transmit_beamformer: c0 must have unit modulus");

        const SteeringVector a = steering_vector(geom, direction);
        const double n_elem = static_cast<double>(geom.size());
        double scale = 1.0 / n_elem;
        if (normalization == BeamNormalization::unit_power)
            scale = 1.0 / std::sqrt(n_elem);

        Beamformer bf;
        bf.pointed_direction = direction;
        bf.phase_factor = c0;
        bf.weights.reserve(a.size());
        for (const auto &ai : a)
            bf.weights.push_back(c0 * scale * (formula == BeamFormula::matched ? std::conj(ai) : ai));
        return bf;
    }

    // Mono-static sensing receiver: the echo arrives from the transmit direction, so
    // w_RX = conj(w_TX) and w_RX^H a(p) = a^T(p) w_TX.
    inline Beamformer sensing_receive_beamformer(const Beamformer &tx)
    {
        Beamformer rx = tx;
        for (auto &w : rx.weights)
            w = std::conj(w);
        return rx;
    }

} // namespace cdu

#endif
