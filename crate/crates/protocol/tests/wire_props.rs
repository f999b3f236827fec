//! Property tests for the wire format: serialization round-trips and
//! framing corruption detection.

use fedmf_protocol::wire::{decode_frame, encode_frame, real_from_string, real_to_string};
use fedmf_protocol::{Body, GradientBody, Message, ProfilesBody, ShapeTag};
use proptest::prelude::*;

fn real_string() -> impl Strategy<Value = String> + Clone {
    any::<f64>()
        .prop_filter("finite", |x| x.is_finite())
        .prop_map(real_to_string)
}

fn hex_string() -> impl Strategy<Value = String> + Clone {
    "[0-9a-f]{1,63}"
}

fn entries(cell: impl Strategy<Value = String> + Clone) -> impl Strategy<Value = Vec<(u32, Vec<String>)>> {
    proptest::collection::vec(
        (any::<u32>(), proptest::collection::vec(cell, 0..5)),
        0..6,
    )
}

fn shape() -> impl Strategy<Value = ShapeTag> {
    prop_oneof![Just(ShapeTag::Full), Just(ShapeTag::Part)]
}

fn profiles_body() -> impl Strategy<Value = ProfilesBody> {
    let rows_plain = proptest::collection::vec(proptest::collection::vec(real_string(), 0..4), 0..5);
    let rows_enc = proptest::collection::vec(proptest::collection::vec(hex_string(), 0..4), 0..5);
    prop_oneof![
        rows_plain.prop_map(|rows| ProfilesBody::Plain { rows }),
        (any::<i64>(), rows_enc)
            .prop_map(|(exponent, rows)| ProfilesBody::Encrypted { exponent, rows }),
    ]
}

fn body() -> impl Strategy<Value = Body> {
    prop_oneof![
        (any::<u32>(), hex_string()).prop_map(|(key_bits, n)| Body::PubKey { key_bits, n }),
        (hex_string(), hex_string()).prop_map(|(p, q)| Body::SecKey { p, q }),
        profiles_body().prop_map(Body::Profiles),
        (shape(), entries(real_string()))
            .prop_map(|(shape, entries)| Body::Gradient(GradientBody::Plain { shape, entries })),
        (shape(), any::<i64>(), entries(hex_string())).prop_map(|(shape, exponent, entries)| {
            Body::Gradient(GradientBody::Encrypted {
                shape,
                exponent,
                entries,
            })
        }),
        profiles_body().prop_map(|profiles| Body::Done { profiles }),
    ]
}

fn message() -> impl Strategy<Value = Message> {
    (any::<u32>(), any::<u64>(), body()).prop_map(|(round, sender, body)| Message {
        round,
        sender,
        body,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn message_frames_round_trip(msg in message()) {
        let frame = encode_frame(&msg);
        prop_assert_eq!(decode_frame(&frame).unwrap(), msg);
    }

    #[test]
    fn truncated_frames_never_parse(msg in message(), cut in 0usize..64) {
        let frame = encode_frame(&msg);
        let cut = frame.len().saturating_sub(1 + cut % frame.len().max(1));
        prop_assert!(decode_frame(&frame[..cut]).is_err());
    }

    #[test]
    fn finite_reals_survive_the_wire(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = real_to_string(x);
        prop_assert_eq!(real_from_string(&s).unwrap().to_bits(), x.to_bits());
    }
}
