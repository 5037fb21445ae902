"""Tests for the masked aggregation messages: client send, server sum, client receive."""

import ast
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest

from fastlloyd.core.exceptions import InvalidInputError, ProtocolViolationError, RingOverflowError
from fastlloyd.core.rng import SeededRng
from fastlloyd.core.types import LocalUpdate
from fastlloyd.msa import server as server_module
from fastlloyd.msa.client import MsaClient, client_receive, client_send
from fastlloyd.msa.server import (
    AggregationServer,
    NoiseSpec,
    RoundState,
    draw_noise,
    server_aggregate,
)
from fastlloyd.msa.transport import LoopbackTransport
from fastlloyd.msa.wire import MessageKind, MsaMessage
from fastlloyd.ringcodec.codec import RingMatrix, decode, encode
from fastlloyd.ringcodec.masks import MaskSet, UpdateKind, derive_masks


def _masks(rng, round_index, kind, clients, shape):
    return derive_masks(rng, round_index, kind, clients, shape)


def _zero_masks(clients, shape):
    zero = RingMatrix.zeros(*shape)
    return MaskSet(masks=tuple(zero for _ in range(clients)), total=zero)


def _random_updates(gen, clients, k, d):
    return [
        LocalUpdate(
            sums=gen.uniform(-2.0, 2.0, size=(k, d)),
            counts=gen.integers(0, 50, size=k).astype(float),
        )
        for _ in range(clients)
    ]


def _fixed_point_sum(parts):
    return sum(np.asarray(decode(encode(p))) for p in parts)


def _send_all(updates, rng, round_index):
    k, d = updates[0].sums.shape
    clients = len(updates)
    masks_r = _masks(rng, round_index, UpdateKind.REL_SUMS, clients, (k, d))
    masks_c = _masks(rng, round_index, UpdateKind.COUNTS, clients, (k, 1))
    sent = [client_send(u, round_index, masks_r, masks_c, i) for i, u in enumerate(updates)]
    return sent, masks_r, masks_c


class TestClientSend:
    def test_zero_update_zero_mask(self):
        update = LocalUpdate(sums=np.zeros((2, 3)), counts=np.zeros(2))
        sums, counts = client_send(update, 0, _zero_masks(2, (2, 3)), _zero_masks(2, (2, 1)), 0)
        assert not sums.matrix.words.any()
        assert not counts.matrix.words.any()

    def test_shapes_and_kinds(self, rng):
        update = LocalUpdate(sums=np.ones((4, 3)), counts=np.ones(4))
        sums, counts = client_send(
            update,
            5,
            _masks(rng, 5, UpdateKind.REL_SUMS, 2, (4, 3)),
            _masks(rng, 5, UpdateKind.COUNTS, 2, (4, 1)),
            1,
        )
        assert (sums.kind, sums.matrix.shape, sums.round_index) == (
            MessageKind.REL_SUMS,
            (4, 3),
            5,
        )
        assert (counts.kind, counts.matrix.shape) == (MessageKind.COUNTS, (4, 1))

    def test_fresh_masks_per_round(self, rng):
        update = LocalUpdate(sums=np.ones((2, 2)), counts=np.ones(2))
        first = client_send(
            update,
            1,
            _masks(rng, 1, UpdateKind.REL_SUMS, 2, (2, 2)),
            _masks(rng, 1, UpdateKind.COUNTS, 2, (2, 1)),
            0,
        )
        second = client_send(
            update,
            2,
            _masks(rng, 2, UpdateKind.REL_SUMS, 2, (2, 2)),
            _masks(rng, 2, UpdateKind.COUNTS, 2, (2, 1)),
            0,
        )
        assert not np.array_equal(first[0].matrix.words, second[0].matrix.words)

    def test_overflow_aborts(self, rng):
        update = LocalUpdate(sums=np.full((1, 1), 2.0**20), counts=np.ones(1))
        with pytest.raises(RingOverflowError):
            client_send(
                update,
                0,
                derive_masks(rng, 0, UpdateKind.REL_SUMS, 1, (1, 1), w=32),
                derive_masks(rng, 0, UpdateKind.COUNTS, 1, (1, 1), w=32),
                0,
                w=32,
            )


class TestServerAggregate:
    def test_noiseless_sum_is_exact(self, rng):
        gen = np.random.default_rng(2)
        updates = _random_updates(gen, 3, 2, 2)
        sent, masks_r, masks_c = _send_all(updates, rng, 0)
        result = server_aggregate([s[0] for s in sent], 0.0, np.random.default_rng(0))
        assert result.kind is MessageKind.NOISED_RESULT
        decoded = client_receive(result, masks_r, 0)
        assert np.array_equal(decoded, _fixed_point_sum([u.sums for u in updates]))

    @pytest.mark.parametrize("clients", [1, 2, 5, 8])
    def test_exact_for_any_party_count(self, rng, clients):
        gen = np.random.default_rng(clients)
        updates = _random_updates(gen, clients, 3, 4)
        sent, _, masks_c = _send_all(updates, rng, 1)
        result = server_aggregate([s[1] for s in sent], 0.0, np.random.default_rng(0))
        decoded = client_receive(result, masks_c, 1).reshape(-1)
        assert np.array_equal(decoded, sum(u.counts for u in updates))

    def test_noise_std_matches_target(self, rng):
        std = 0.5
        shape = (1000, 100)
        update = LocalUpdate(sums=np.zeros(shape), counts=np.zeros(1000))
        masks_r = _masks(rng, 0, UpdateKind.REL_SUMS, 1, shape)
        masks_c = _masks(rng, 0, UpdateKind.COUNTS, 1, (1000, 1))
        sums, _ = client_send(update, 0, masks_r, masks_c, 0)
        result = server_aggregate([sums], std, np.random.default_rng(42))
        noise = client_receive(result, masks_r, 0)
        assert abs(noise.std() - std) / std < 0.05
        assert abs(noise.mean()) < 0.01

    def test_laplace_distribution(self):
        gamma = draw_noise(np.random.default_rng(1), "laplace", 2.0, (200, 500))
        # Laplace(b) has variance 2 b^2.
        assert abs(gamma.std() - 2.0 * np.sqrt(2.0)) / (2.0 * np.sqrt(2.0)) < 0.05

    def test_zero_scale_draws_nothing(self):
        gen = np.random.default_rng(9)
        draw_noise(gen, "gaussian", 0.0, (3, 3))
        assert gen.random() == np.random.default_rng(9).random()

    def test_unknown_distribution(self):
        with pytest.raises(InvalidInputError):
            draw_noise(np.random.default_rng(0), "cauchy", 1.0, (1, 1))

    def test_round_mismatch(self):
        a = MsaMessage(0, MessageKind.REL_SUMS, RingMatrix.zeros(2, 2))
        b = MsaMessage(1, MessageKind.REL_SUMS, RingMatrix.zeros(2, 2))
        with pytest.raises(ProtocolViolationError, match="mixed"):
            server_aggregate([a, b], 0.0, np.random.default_rng(0))

    def test_shape_mismatch(self):
        a = MsaMessage(0, MessageKind.REL_SUMS, RingMatrix.zeros(2, 2))
        b = MsaMessage(0, MessageKind.REL_SUMS, RingMatrix.zeros(2, 1))
        with pytest.raises(ProtocolViolationError, match="shape"):
            server_aggregate([a, b], 0.0, np.random.default_rng(0))

    def test_empty(self):
        with pytest.raises(ProtocolViolationError):
            server_aggregate([], 0.0, np.random.default_rng(0))


class TestClientReceive:
    def test_all_clients_decode_the_same_broadcast(self, rng):
        updates = _random_updates(np.random.default_rng(4), 2, 2, 2)
        sent, masks_r, _ = _send_all(updates, rng, 0)
        result = server_aggregate([s[0] for s in sent], 0.3, np.random.default_rng(0))
        # Each party rederives the mask set from the shared seed.
        own = _masks(SeededRng(rng.seed), 0, UpdateKind.REL_SUMS, 2, (2, 2))
        assert np.array_equal(client_receive(result, masks_r, 0), client_receive(result, own, 0))

    def test_tampered_word_shifts_by_delta(self, rng):
        updates = _random_updates(np.random.default_rng(6), 2, 2, 2)
        sent, masks_r, _ = _send_all(updates, rng, 0)
        result = server_aggregate([s[0] for s in sent], 0.0, np.random.default_rng(0))
        words = result.matrix.words.copy()
        words[1, 0] += np.uint64(5)
        tampered = MsaMessage(0, MessageKind.NOISED_RESULT, RingMatrix(words))
        delta = client_receive(tampered, masks_r, 0) - client_receive(result, masks_r, 0)
        expected = np.zeros((2, 2))
        expected[1, 0] = 5 / 2.0**16
        assert np.array_equal(delta, expected)

    def test_wrong_kind(self, rng):
        msg = MsaMessage(0, MessageKind.COUNTS, RingMatrix.zeros(2, 1))
        with pytest.raises(ProtocolViolationError, match="NOISED_RESULT"):
            client_receive(msg, _zero_masks(2, (2, 1)), 0)

    def test_wrong_round(self):
        msg = MsaMessage(3, MessageKind.NOISED_RESULT, RingMatrix.zeros(2, 1))
        with pytest.raises(ProtocolViolationError, match="round"):
            client_receive(msg, _zero_masks(2, (2, 1)), 2)

    def test_wrong_shape(self):
        msg = MsaMessage(0, MessageKind.NOISED_RESULT, RingMatrix.zeros(3, 1))
        with pytest.raises(ProtocolViolationError, match="shape"):
            client_receive(msg, _zero_masks(2, (2, 1)), 0)


class TestRoundState:
    def _msg(self, round_index=0, kind=MessageKind.REL_SUMS, w=64):
        return MsaMessage(round_index, kind, RingMatrix.zeros(1, 1, w=w))

    def test_complete_after_both_kinds(self):
        state = RoundState(0, expected=1, width=64)
        state.add(self._msg())
        assert not state.complete
        state.add(self._msg(kind=MessageKind.COUNTS))
        assert state.complete

    def test_wrong_round(self):
        with pytest.raises(ProtocolViolationError, match="round"):
            RoundState(0, expected=1, width=64).add(self._msg(round_index=1))

    def test_clients_cannot_send_results(self):
        with pytest.raises(ProtocolViolationError):
            RoundState(0, expected=1, width=64).add(self._msg(kind=MessageKind.NOISED_RESULT))

    def test_width_mismatch(self):
        with pytest.raises(ProtocolViolationError, match="32-bit"):
            RoundState(0, expected=1, width=32).add(self._msg(w=64))

    def test_duplicate(self):
        state = RoundState(0, expected=1, width=64)
        state.add(self._msg())
        with pytest.raises(ProtocolViolationError, match="too many"):
            state.add(self._msg())

    def test_planned_shapes_accepted(self):
        state = RoundState(0, expected=1, width=64, shape=(2, 3))
        state.add(MsaMessage(0, MessageKind.REL_SUMS, RingMatrix.zeros(2, 3)))
        state.add(MsaMessage(0, MessageKind.COUNTS, RingMatrix.zeros(2, 1)))
        assert state.complete

    @pytest.mark.parametrize(
        ("kind", "rows", "cols"),
        [(MessageKind.REL_SUMS, 2, 5), (MessageKind.REL_SUMS, 3, 3), (MessageKind.COUNTS, 3, 1)],
    )
    def test_off_plan_shape_rejected(self, kind, rows, cols):
        state = RoundState(0, expected=1, width=64, shape=(2, 3))
        with pytest.raises(ProtocolViolationError, match="planned"):
            state.add(MsaMessage(0, kind, RingMatrix.zeros(rows, cols)))


class TestNoiseSpec:
    @pytest.mark.parametrize(
        ("spec", "silent"),
        [
            (NoiseSpec("none", 0.5, 0.5), True),
            (NoiseSpec("gaussian", 0.0, 0.0), True),
            (NoiseSpec("gaussian", 0.1, 0.0), False),
            (NoiseSpec("laplace", 0.0, 2.0), False),
        ],
    )
    def test_silent(self, spec, silent):
        assert spec.silent is silent

    def test_server_module_does_not_import_algorithms(self):
        tree = ast.parse(Path(server_module.__file__).read_text())
        imported = set()
        for node in ast.walk(tree):
            if isinstance(node, ast.ImportFrom) and node.module:
                imported.add(node.module)
            elif isinstance(node, ast.Import):
                imported.update(alias.name for alias in node.names)
        assert "fastlloyd.core.exceptions" in imported
        assert not any(name.startswith("fastlloyd.baselines") for name in imported)


class TestServerLoop:
    def test_transcript_hides_encoded_inputs(self, params):
        servers, clients = LoopbackTransport().connect(2)
        server = AggregationServer(
            servers,
            [NoiseSpec("gaussian", 0.1, 0.1)],
            q=16,
            w=64,
            shape=(params.k, params.d),
            record_transcript=True,
        )
        rng = SeededRng(params.seed)
        parties = [MsaClient(ch, i, params, rng) for i, ch in enumerate(clients)]
        updates = _random_updates(np.random.default_rng(8), 2, params.k, params.d)

        with ThreadPoolExecutor(max_workers=3) as pool:
            stats = pool.submit(server.run)
            results = [pool.submit(p.aggregate, u, 0) for p, u in zip(parties, updates)]
            decoded = [r.result(5.0) for r in results]
            assert stats.result(5.0).rounds == 1

        inputs = {int(w) for u in updates for w in encode(u.sums).words.ravel()}
        inputs |= {int(w) for u in updates for w in encode(u.counts).words.ravel()}
        seen = {int(w) for msg in server.transcript for w in msg.matrix.words.ravel()}
        assert not inputs & seen
        assert np.array_equal(decoded[0].sums, decoded[1].sums)
        assert len(server.transcript) == 4

    def test_byte_accounting(self, params, caplog):
        caplog.set_level(logging.INFO, logger="fastlloyd.msa.server")
        servers, clients = LoopbackTransport().connect(2)
        server = AggregationServer(
            servers, [NoiseSpec("none", 0.0, 0.0)] * 3, q=16, w=64, shape=(2, 2)
        )
        rng = SeededRng(params.seed)
        parties = [MsaClient(ch, i, params, rng) for i, ch in enumerate(clients)]
        update = LocalUpdate(sums=np.zeros((2, 2)), counts=np.zeros(2))

        def run_party(party):
            for t in range(3):
                party.aggregate(update, t)

        with ThreadPoolExecutor(max_workers=3) as pool:
            futures = [pool.submit(server.run), *(pool.submit(run_party, p) for p in parties)]
            for future in futures:
                future.result(5.0)

        # Per round: 2x2 sums plus 2x1 counts, 8-byte words, each way.
        assert parties[0].payload_bytes_sent == 3 * 48
        assert parties[0].payload_bytes_received == 3 * 48
        assert server.stats.payload_bytes_received == 3 * 2 * 48
        assert clients[0].stats.sends == 3
        assert "3 rounds (0 noised)" in caplog.text

    def test_server_rejects_wider_updates_than_planned(self, params, caplog):
        caplog.set_level(logging.INFO, logger="fastlloyd.msa.server")
        servers, clients = LoopbackTransport().connect(2)
        server = AggregationServer(
            servers, [NoiseSpec("gaussian", 1.0, 1.0)], q=16, w=64, shape=(params.k, params.d)
        )
        rng = SeededRng(params.seed)
        parties = [
            MsaClient(ch, i, params, rng, round_timeout_s=1.0) for i, ch in enumerate(clients)
        ]
        wide = LocalUpdate(sums=np.zeros((params.k, params.d + 3)), counts=np.ones(params.k))

        with ThreadPoolExecutor(max_workers=3) as pool:
            served = pool.submit(server.run)
            sent = [pool.submit(p.aggregate, wide, 0) for p in parties]
            with pytest.raises(ProtocolViolationError, match="planned"):
                served.result(5.0)
            assert "1 rounds (1 noised)" in caplog.text
            for future in sent:
                assert future.exception(5.0) is not None
