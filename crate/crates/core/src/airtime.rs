//! LoRa time-on-air.
//!
//! Symbol, preamble and frame durations following the SX1272 modem formula.
//! The preamble length is given as the full on-air symbol count (12.25 for an
//! 8-symbol programmed preamble), so no extra 4.25 symbols are added here.
//!
//! These durations feed the per-attempt timings of the chain model: the
//! uplink airtime, and the preamble and ACK airtimes for each receive slot.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

/// Largest LoRa PHY payload.
pub const MAX_PAYLOAD_BYTES: u16 = 255;

/// Spreading factor used for the second receive slot (DR0).
pub const RS2_SPREADING_FACTOR: u8 = 12;

const BANDWIDTHS: [u32; 3] = [125_000, 250_000, 500_000];

/// How the uplink data rate evolves across retransmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSchedule {
    /// Every attempt uses the configured spreading factor.
    #[default]
    Fixed,
    /// The data rate drops one step (SF + 1) after every two attempts,
    /// saturating at SF12.
    StepEveryTwo,
}

/// PHY parameters shared by uplink data frames and downlink ACKs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub spreading_factor: u8,
    /// Hz.
    pub bandwidth: u32,
    /// 5..=8 for coding rates 4/5..4/8.
    pub coding_rate_denominator: u8,
    /// Full on-air preamble length in symbols.
    pub preamble_symbols: f64,
    pub data_payload_bytes: u16,
    pub ack_payload_bytes: u16,
    pub implicit_header: bool,
    pub low_dr_optimize: bool,
    /// Data-rate steps between the uplink and the RS1 downlink.
    pub rs1_dr_offset: u8,
    /// Uplinks carry the 16-bit PHY CRC.
    pub uplink_crc: bool,
    /// Downlinks carry the 16-bit PHY CRC (LoRa downlinks normally do not).
    pub ack_crc: bool,
    pub rate_schedule: RateSchedule,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            spreading_factor: 12,
            bandwidth: 125_000,
            coding_rate_denominator: 7,
            preamble_symbols: 12.25,
            data_payload_bytes: 21,
            ack_payload_bytes: 12,
            implicit_header: true,
            low_dr_optimize: false,
            rs1_dr_offset: 0,
            uplink_crc: true,
            ack_crc: false,
            rate_schedule: RateSchedule::Fixed,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        check_sf(self.spreading_factor)?;
        if !BANDWIDTHS.contains(&self.bandwidth) {
            return Err(ModelError::param(
                "bandwidth",
                format!("{} Hz is not one of 125000, 250000, 500000", self.bandwidth),
            ));
        }
        if !(5..=8).contains(&self.coding_rate_denominator) {
            return Err(ModelError::param(
                "coding_rate_denominator",
                format!("{} is outside 5..=8", self.coding_rate_denominator),
            ));
        }
        if !(self.preamble_symbols.is_finite() && self.preamble_symbols > 0.0) {
            return Err(ModelError::param(
                "preamble_symbols",
                format!("{} must be positive", self.preamble_symbols),
            ));
        }
        check_payload("data_payload_bytes", self.data_payload_bytes)?;
        check_payload("ack_payload_bytes", self.ack_payload_bytes)?;
        Ok(())
    }

    /// Uplink spreading factor for the given attempt (1-based).
    pub fn uplink_sf(&self, attempt: usize) -> u8 {
        match self.rate_schedule {
            RateSchedule::Fixed => self.spreading_factor,
            RateSchedule::StepEveryTwo => {
                let steps = attempt.saturating_sub(1) / 2;
                (self.spreading_factor as usize + steps).min(12) as u8
            }
        }
    }

    /// RS1 downlink spreading factor for the given attempt.
    pub fn rs1_sf(&self, attempt: usize) -> u8 {
        (self.uplink_sf(attempt) + self.rs1_dr_offset).min(12)
    }
}

fn check_sf(sf: u8) -> Result<()> {
    if (7..=12).contains(&sf) {
        Ok(())
    } else {
        Err(ModelError::param(
            "spreading_factor",
            format!("SF{sf} is outside 7..=12"),
        ))
    }
}

fn check_payload(name: &'static str, bytes: u16) -> Result<()> {
    if bytes == 0 || bytes > MAX_PAYLOAD_BYTES {
        return Err(ModelError::param(
            name,
            format!("{bytes} bytes is outside 1..={MAX_PAYLOAD_BYTES}"),
        ));
    }
    Ok(())
}

/// Symbol duration 2^SF / BW in seconds.
pub fn symbol_duration<T: Scalar>(sf: u8, bw: u32) -> Result<T> {
    check_sf(sf)?;
    if bw == 0 {
        return Err(ModelError::param("bandwidth", "must be positive"));
    }
    Ok(T::from_count(1usize << sf) / T::from_count(bw as usize))
}

/// Preamble airtime at the configured uplink rate.
pub fn preamble_duration<T: Scalar>(radio: &RadioConfig) -> Result<T> {
    radio.validate()?;
    preamble_at(radio, radio.spreading_factor)
}

fn preamble_at<T: Scalar>(radio: &RadioConfig, sf: u8) -> Result<T> {
    Ok(T::lit(radio.preamble_symbols) * symbol_duration::<T>(sf, radio.bandwidth)?)
}

/// Number of payload symbols (header, payload, CRC) for a frame.
pub fn payload_symbols(payload_bytes: u16, sf: u8, radio: &RadioConfig, crc: bool) -> Result<u32> {
    check_sf(sf)?;
    check_payload("payload_bytes", payload_bytes)?;
    let de = i32::from(radio.low_dr_optimize);
    let h = i32::from(radio.implicit_header);
    let crc = i32::from(crc);
    let sf = i32::from(sf);
    let num = 8 * i32::from(payload_bytes) - 4 * sf + 28 + 16 * crc - 20 * h;
    let den = 4 * (sf - 2 * de);
    let blocks = if num > 0 && num % den != 0 {
        num / den + 1
    } else {
        num / den
    };
    let coded = (blocks * i32::from(radio.coding_rate_denominator)).max(0);
    Ok(8 + coded as u32)
}

/// Airtime of a frame with an explicit payload-symbol count.
pub fn frame_duration<T: Scalar>(radio: &RadioConfig, sf: u8, payload_symbols: u32) -> Result<T> {
    let ts = symbol_duration::<T>(sf, radio.bandwidth)?;
    Ok(preamble_at::<T>(radio, sf)? + T::from_count(payload_symbols as usize) * ts)
}

/// Uplink time-on-air of `payload_bytes` at the configured rate.
pub fn time_on_air<T: Scalar>(payload_bytes: u16, radio: &RadioConfig) -> Result<T> {
    radio.validate()?;
    let sf = radio.spreading_factor;
    let n = payload_symbols(payload_bytes, sf, radio, radio.uplink_crc)?;
    frame_duration(radio, sf, n)
}

/// Durations the chain model needs for one transmission attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptTiming<T> {
    /// Uplink data frame airtime.
    pub tx: T,
    pub rs1_preamble: T,
    pub rs1_ack: T,
    pub rs2_preamble: T,
    pub rs2_ack: T,
}

impl<T: Scalar> AttemptTiming<T> {
    /// β: the RS1 ACK fits before RS2 opens one second later.
    pub fn rs1_ack_fits(&self) -> bool {
        self.rs1_ack < T::one()
    }
}

/// Timings for attempt `attempt` (1-based) under the radio's rate schedule.
pub fn attempt_timing<T: Scalar>(radio: &RadioConfig, attempt: usize) -> Result<AttemptTiming<T>> {
    radio.validate()?;
    let up_sf = radio.uplink_sf(attempt);
    let rs1_sf = radio.rs1_sf(attempt);
    let rs2_sf = RS2_SPREADING_FACTOR;
    let ack = |sf| -> Result<T> {
        let n = payload_symbols(radio.ack_payload_bytes, sf, radio, radio.ack_crc)?;
        frame_duration(radio, sf, n)
    };
    let up_syms = payload_symbols(radio.data_payload_bytes, up_sf, radio, radio.uplink_crc)?;
    Ok(AttemptTiming {
        tx: frame_duration(radio, up_sf, up_syms)?,
        rs1_preamble: preamble_at(radio, rs1_sf)?,
        rs1_ack: ack(rs1_sf)?,
        rs2_preamble: preamble_at(radio, rs2_sf)?,
        rs2_ack: ack(rs2_sf)?,
    })
}
