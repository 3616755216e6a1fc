import io
import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal
from pytest import raises

from qandysig.channels import (
    AuthChannel,
    Party,
    PadStore,
    QandyChannel,
    Transcript,
    auth_send,
    otp_send,
    send_qandy,
)
from qandysig.errors import AlreadyConsumed, PadExhausted, ParameterError
from qandysig.qandy import QandyChar, QandyString, prepare, referee_view
from qandysig.rng import Rng


def test_noiseless_channel_preserves_characters():
    ch = QandyChannel(0.0, Rng(0))
    s = QandyString.prepare([0, 1, 2, 3], indices=[4, 5, 6, 7])
    out = ch.send_string(s)
    assert s.consumed
    assert_array_equal(referee_view(out), [0, 1, 2, 3])
    assert_array_equal(out.indices, [4, 5, 6, 7])
    with raises(AlreadyConsumed):
        ch.send_string(s)


def test_channel_flips_within_basis():
    size, p = 100_000, 0.1
    ch = QandyChannel(p, Rng(5))
    chars = Rng(6).characters(size)
    out = referee_view(ch.send_string(QandyString.prepare(chars)))
    assert_array_equal(out >> 1, chars >> 1)
    flipped = np.count_nonzero(out != chars)
    assert flipped == ch.flipped and ch.sent == size
    assert abs(flipped / size - p) < 3 * np.sqrt(p * (1 - p) / size)


def test_single_qandy_send():
    ch = QandyChannel(0.0, Rng(0))
    q = prepare(QandyChar.V, index=9)
    out = send_qandy(ch, q)
    assert q.consumed and out.index == 9
    assert referee_view(out) is QandyChar.V


@pytest.mark.parametrize("p", [-0.1, 0.5, 0.7])
def test_channel_noise_range(p):
    with raises(ParameterError):
        QandyChannel(p, Rng(0))


def test_otp_example():
    pads = PadStore(Transcript())
    pads.install(Party.ALICE, Party.BOB, [1, 0, 1, 1])
    plain = otp_send(pads, [0, 0, 0, 0], Party.ALICE, Party.BOB, step="sig")
    assert_array_equal(plain, [0, 0, 0, 0])
    (msg,) = pads.transcript.messages(step="sig")
    assert msg.kind == "otp"
    assert msg.payload == bytes([0b10110000])  # only the ciphertext is logged
    assert pads.remaining(Party.BOB, Party.ALICE) == 0
    with raises(PadExhausted):
        otp_send(pads, [1], Party.BOB, Party.ALICE)


def test_pad_bits_are_read_once():
    pads = PadStore()
    pads.install(Party.BOB, Party.CHARLIE, np.arange(10) % 2)
    pads.reserve(Party.BOB, Party.CHARLIE, 3)
    pads.send([1, 1], Party.CHARLIE, Party.BOB, step="x")
    assert pads.consumed(Party.BOB, Party.CHARLIE) == 5
    assert_array_equal(pads.consumed_offsets(Party.CHARLIE, Party.BOB), range(5))
    with raises(PadExhausted):
        pads.reserve(Party.BOB, Party.CHARLIE, 6)
    # a failed read does not move the cursor
    assert pads.remaining(Party.BOB, Party.CHARLIE) == 5


def test_mismatched_pad_copies_decrypt_with_receiver_copy():
    pads = PadStore()
    pads.install(Party.ALICE, Party.CHARLIE, [0, 0, 0], pad_b=[0, 1, 0])
    out = pads.send([1, 1, 1], Party.ALICE, Party.CHARLIE, step="x")
    assert_array_equal(out, [1, 0, 1])


@pytest.mark.parametrize(
    "args", [(Party.ALICE, Party.ALICE, [0]), (Party.ALICE, Party.BOB, [0, 2])]
)
def test_invalid_pads(args):
    with raises(ParameterError):
        PadStore().install(*args)
    with raises(ParameterError):
        PadStore().remaining(Party.ALICE, Party.BOB)


def test_auth_channel_accounts_tags():
    transcript = Transcript(trial=3)
    ch = AuthChannel(Party.BOB, Party.CHARLIE, transcript, tag_length=64)
    for i in range(3):
        assert auth_send(ch, f"msg {i}", step="disclose") == f"msg {i}"
    assert ch.auth_cost == 192
    assert [m.payload for m in ch.messages()] == [b"msg 0", b"msg 1", b"msg 2"]
    assert all(m.trial == 3 for m in transcript)


def test_auth_channel_draws_tags_from_pads():
    pads = PadStore()
    pads.install(Party.ALICE, Party.BOB, np.zeros(100, dtype=np.uint8))
    ch = AuthChannel(Party.ALICE, Party.BOB, Transcript(), tag_length=64, pads=pads)
    ch.send("one", step="s")
    with raises(PadExhausted):
        ch.send("two", step="s")


def test_transcript_order_and_jsonl():
    transcript = Transcript(trial=1)
    transcript.log(Party.ALICE, Party.BOB, "auth", "a", step="one")
    transcript.log(Party.BOB, Party.CHARLIE, "auth", "b", step="two")
    transcript.log(Party.CHARLIE, Party.ALICE, "auth", "c", step="one")
    assert [m.payload for m in transcript.messages(step="one")] == [b"a", b"c"]

    fp = io.StringIO()
    transcript.write(fp)
    lines = [json.loads(line) for line in fp.getvalue().splitlines()]
    assert [r["step"] for r in lines] == ["one", "two", "one"]
    assert lines[1] == {
        "trial": 1,
        "step": "two",
        "from": "bob",
        "to": "charlie",
        "kind": "auth",
        "payload_hex": b"b".hex(),
    }
