#pragma once

#include "smmergo/errors.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smmergo {

enum class ModelId { alw, fw };

[[nodiscard]] inline std::string_view to_string(ModelId m) noexcept {
    return m == ModelId::alw ? "alw" : "fw";
}

[[nodiscard]] inline ModelId parse_model(std::string_view s) {
    if (s == "alw" || s == "ALW") return ModelId::alw;
    if (s == "fw" || s == "FW") return ModelId::fw;
    throw ParameterDomainError("unknown model '" + std::string(s) + "' (expected alw or fw)");
}

/**
 * @brief Herding model with Langevin sentiment dynamics (three parameters).
 *
 * Values are stored in natural units. Reports and configs use the display
 * convention, which multiplies every entry by 1000.
 */
struct AlwParams {
    static constexpr double display_scale = 1e3;

    double a = 0.3e-3;        ///< idiosyncratic switching rate
    double b = 1.4e-3;        ///< herding intensity
    double sigma_f = 30e-3;   ///< fundamental news volatility

    [[nodiscard]] static constexpr AlwParams truth() noexcept { return {}; }

    [[nodiscard]] static AlwParams from_display(double a, double b, double sigma_f) {
        return {a / display_scale, b / display_scale, sigma_f / display_scale};
    }

    void validate() const {
        if (!(a > 0.0) || !(b > 0.0) || !(sigma_f > 0.0) || !std::isfinite(a) ||
            !std::isfinite(b) || !std::isfinite(sigma_f))
            throw ParameterDomainError("ALW parameters require a > 0, b > 0, sigma_f > 0");
    }
};

/// Discrete-choice chartist/fundamentalist model with herding, predisposition
/// and misalignment (seven estimated parameters plus three constants).
struct FwParams {
    static constexpr double beta = 1.0;    ///< intensity of choice
    static constexpr double mu = 0.01;     ///< price adjustment speed
    static constexpr double p_star = 0.0;  ///< log fundamental value

    double phi = 0.12;
    double chi = 1.5;
    double alpha_0 = -0.336;
    double alpha_n = 1.839;
    double alpha_p = 19.671;
    double sigma_f = 0.708;
    double sigma_c = 2.147;

    [[nodiscard]] static constexpr FwParams truth() noexcept { return {}; }

    void validate() const {
        const std::array<double, 7> all{phi, chi, alpha_0, alpha_n, alpha_p, sigma_f, sigma_c};
        for (double v : all)
            if (!std::isfinite(v)) throw ParameterDomainError("FW parameters must be finite");
        if (!(phi > 0.0) || !(chi > 0.0) || !(alpha_n > 0.0) || !(alpha_p > 0.0) ||
            !(sigma_f > 0.0) || !(sigma_c > 0.0))
            throw ParameterDomainError(
                "FW parameters require phi, chi, alpha_n, alpha_p, sigma_f, sigma_c > 0");
    }
};

[[nodiscard]] inline std::span<const std::string_view> param_names(ModelId m) noexcept {
    static constexpr std::array<std::string_view, 3> alw{"a", "b", "sigma_f"};
    static constexpr std::array<std::string_view, 7> fw{"phi",     "chi",     "alpha_0", "alpha_n",
                                                        "alpha_p", "sigma_f", "sigma_c"};
    if (m == ModelId::alw) return alw;
    return fw;
}

[[nodiscard]] inline std::size_t param_count(ModelId m) noexcept { return param_names(m).size(); }

[[nodiscard]] inline std::size_t param_index(ModelId m, std::string_view name) {
    const auto names = param_names(m);
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw ParameterDomainError("model " + std::string(to_string(m)) + " has no parameter '" +
                               std::string(name) + "'");
}

/// Factor between natural and display units (1000 for ALW, 1 for FW).
[[nodiscard]] inline double display_scale(ModelId m) noexcept {
    return m == ModelId::alw ? AlwParams::display_scale : 1.0;
}

/// Model parameters as a flat vector in natural units, ordered as param_names().
struct ParamVector {
    ModelId model = ModelId::alw;
    std::vector<double> values;

    [[nodiscard]] static ParamVector truth(ModelId m) {
        if (m == ModelId::alw) return from(AlwParams::truth());
        return from(FwParams::truth());
    }

    [[nodiscard]] static ParamVector from(const AlwParams& p) {
        return {ModelId::alw, {p.a, p.b, p.sigma_f}};
    }

    [[nodiscard]] static ParamVector from(const FwParams& p) {
        return {ModelId::fw,
                {p.phi, p.chi, p.alpha_0, p.alpha_n, p.alpha_p, p.sigma_f, p.sigma_c}};
    }

    [[nodiscard]] static ParamVector from_display(ModelId m, std::vector<double> display) {
        const double s = display_scale(m);
        for (double& v : display) v /= s;
        ParamVector pv{m, std::move(display)};
        pv.check_dimension();
        return pv;
    }

    [[nodiscard]] std::vector<double> to_display() const {
        std::vector<double> out(values);
        const double s = display_scale(model);
        for (double& v : out) v *= s;
        return out;
    }

    [[nodiscard]] AlwParams alw() const {
        if (model != ModelId::alw) throw ParameterDomainError("parameter vector is not ALW");
        check_dimension();
        return {values[0], values[1], values[2]};
    }

    [[nodiscard]] FwParams fw() const {
        if (model != ModelId::fw) throw ParameterDomainError("parameter vector is not FW");
        check_dimension();
        FwParams p;
        p.phi = values[0];
        p.chi = values[1];
        p.alpha_0 = values[2];
        p.alpha_n = values[3];
        p.alpha_p = values[4];
        p.sigma_f = values[5];
        p.sigma_c = values[6];
        return p;
    }

    void validate() const {
        if (model == ModelId::alw)
            alw().validate();
        else
            fw().validate();
    }

    void check_dimension() const {
        if (values.size() != param_count(model))
            throw ParameterDomainError("model " + std::string(to_string(model)) + " expects " +
                                       std::to_string(param_count(model)) + " parameters, got " +
                                       std::to_string(values.size()));
    }

    friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

}  // namespace smmergo
