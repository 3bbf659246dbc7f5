#pragma once

namespace dnpr::constants {

// Unit system of the data model: energies as H/h in MHz, fields in mT,
// times in ms (µs inside the propagator), lengths in nm.

// SI anchors.
inline constexpr double kPlanck = 6.62607015e-34;    // J s
inline constexpr double kBoltzmann = 1.380649e-23;   // J / K
inline constexpr double kMu0Over4Pi = 1.0e-7;        // T m / A

// Gyromagnetic ratios (cyclic, signed), MHz / mT.
// The electron value serves both the NV and the P1.
inline constexpr double kGammaElectron = -28.0249;
inline constexpr double kGammaC13 = 10.708e-3;
inline constexpr double kGammaN14 = 3.0777e-3;

// NV ground-state zero-field splitting, MHz.
inline constexpr double kNvZeroFieldMHz = 2870.0;

// P1 centre 14N hyperfine tensor (axial), MHz.
inline constexpr double kP1N14AParMHz = 114.0;
inline constexpr double kP1N14APerpMHz = 81.3;

// NV centre 14N hyperfine (isotropic), MHz.
inline constexpr double kNvN14IsoMHz = 3.0;

// Point-dipole prefactor: C12 = (mu0/4pi) h g1 g2 in MHz nm^3 for
// gyromagnetic ratios in MHz/mT.  Derivation: g [MHz/mT] = g*1e9 [Hz/T],
// (1e-7)(6.626e-34)(g1 g2 1e18) Hz m^3 * 1e27 nm^3/m^3 / 1e6 MHz/Hz.
inline constexpr double dipole_prefactor_MHz_nm3(double g1_MHz_per_mT,
                                                 double g2_MHz_per_mT) {
    return kMu0Over4Pi * kPlanck * 1.0e39 * g1_MHz_per_mT * g2_MHz_per_mT;
}

// Electron-electron value, 52.04 MHz nm^3.
inline constexpr double kCee =
    dipole_prefactor_MHz_nm3(kGammaElectron, kGammaElectron);

// Diamond carbon number density, atoms / nm^3 (ppm -> defect density).
inline constexpr double kCarbonDensityPerNm3 = 176.3;

inline constexpr double ppm_to_density_per_nm3(double ppm) {
    return ppm * 1.0e-6 * kCarbonDensityPerNm3;
}

} // namespace dnpr::constants
