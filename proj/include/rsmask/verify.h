#pragma once

// Self-checks run by `verify`: every S-box model and the AES core against an
// independent polynomial-basis oracle, plus the exhaustive theorem checks.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rsmask {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// FIPS-197 S-box from a brute-force inverse in GF(2^8) and the affine map,
/// sharing no code with the tower datapath.
std::uint8_t oracle_sbox(std::uint8_t x);

/// Compares a candidate S-box table with the oracle; used by the field check.
CheckResult check_sbox_table(const std::array<std::uint8_t, 256>& table, std::string name = "sbox-table");
CheckResult check_field_oracle();
CheckResult check_sbox_models(int seeds = 100);
CheckResult check_rs_exhaustive();
CheckResult check_aes_vectors();
CheckResult check_aes_equivalence(std::uint64_t triples = 10000);
CheckResult check_rs_hygiene();
CheckResult check_theorems();

std::vector<CheckResult> run_verify();

}  // namespace rsmask
