#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace autoscope {

enum class LedgerKind { dwell, travel, flyback, spectro, decision, modify };
constexpr int kLedgerKinds = 6;

const char* ledger_kind_name(LedgerKind k);
LedgerKind ledger_kind_from_name(const std::string& name);

struct LedgerEntry {
    LedgerKind kind;
    double duration;  // seconds of simulated time
    double t_start;
};

/// Itemized account of simulated time. The clock advances only through
/// advance(), so refolding the entries reproduces the clock bit-exactly.
class LatencyLedger {
public:
    double advance(LedgerKind kind, double duration) {
        if (duration < 0.0) throw std::invalid_argument("ledger: negative duration");
        entries_.push_back({kind, duration, clock_});
        totals_[static_cast<int>(kind)] += duration;
        clock_ += duration;
        return clock_;
    }

    double clock() const { return clock_; }
    double total(LedgerKind kind) const { return totals_[static_cast<int>(kind)]; }
    const std::vector<LedgerEntry>& entries() const { return entries_; }

    /// Refold all durations in entry order; equals clock() exactly.
    double refold() const {
        double t = 0.0;
        for (const auto& e : entries_) t += e.duration;
        return t;
    }

    void restore(std::vector<LedgerEntry> entries);  // used by replay

private:
    std::vector<LedgerEntry> entries_;
    std::array<double, kLedgerKinds> totals_{};
    double clock_ = 0.0;
};

}  // namespace autoscope
