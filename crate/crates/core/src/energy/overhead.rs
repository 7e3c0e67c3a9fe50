//! Storage cost of the hardware structures that support power states.

/// Bits needed to name one of `n` values; 0 for `n <= 1`.
pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

/// Lookup table holding `entries_per_warp` (PC, operand register numbers)
/// records for each of `max_warps` resident warps.
pub fn lookup_table_bits(
    max_warps: u64,
    entries_per_warp: u64,
    pc_bits: u64,
    regs_per_thread: u64,
    operand_slots: u64,
) -> u64 {
    max_warps * entries_per_warp * (pc_bits + ceil_log2(regs_per_thread) * operand_slots)
}

/// Extra scoreboard storage when up to four source register numbers are
/// tracked per warp.
pub fn scoreboard_overhead_bits(max_warps: u64, regs_per_thread: u64) -> u64 {
    4 * max_warps * ceil_log2(regs_per_thread)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_rounding() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(64), 6);
        assert_eq!(ceil_log2(65), 7);
    }

    #[test]
    fn lookup_table_examples() {
        assert_eq!(lookup_table_bits(1, 1, 8, 2, 1), 9);
        assert_eq!(lookup_table_bits(64, 2, 32, 64, 4), 7168);
        assert_eq!(lookup_table_bits(64, 4, 32, 64, 4), 2 * 7168);
    }

    #[test]
    fn scoreboard_examples() {
        assert_eq!(scoreboard_overhead_bits(64, 64), 1536);
        assert_eq!(scoreboard_overhead_bits(64, 64) / 8, 192);
        assert_eq!(scoreboard_overhead_bits(1, 2), 4);
        assert_eq!(scoreboard_overhead_bits(128, 64), 3072);
    }
}
