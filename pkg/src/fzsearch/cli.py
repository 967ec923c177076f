"""Command line front end.

Owner side: ``keygen``, ``build``, ``serve``, ``enroll``, ``revoke``.
User side: ``search`` (``verify`` is search with proof checking forced).
``bench`` runs the measurement harness.

The key file path comes from ``--keys`` or the ``FZ_KEYFILE`` environment
variable.  Enrollment derives each user's personal key from the record key
and user id, prints it once, and hands delivery off-channel; revocation can
therefore re-wrap the rotated blind key from the files alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import bench as bench_mod
from .crypto import keygen, decrypt_record, prf_bytes
from .errors import EmptyKeyword, FzError
from .fuzzyset import normalize_keyword
from .index import build_listing_index, build_trie_index, make_request
from .multiuser import UserDirectory, blind_request
from .persist import (
    load_directory,
    load_index,
    load_keys,
    save_directory,
    save_index,
    save_keys,
)
from .service import (
    DEFAULT_PORT,
    SearchClient,
    SearchServer,
    ServerState,
    result_from_response,
)
from .verifiable import build_auth_trie, decode_proof, verify

KEYFILE_ENV = "FZ_KEYFILE"


def _keyfile(args) -> str:
    path = args.keys or os.environ.get(KEYFILE_ENV)
    if not path:
        raise FzError(f"no key file: pass --keys or set {KEYFILE_ENV}")
    return path


def derive_user_key(record_key: bytes, user_id: str) -> bytes:
    return prf_bytes(record_key, b"U:" + user_id.encode("utf-8"), 32)


def _cmd_keygen(args) -> int:
    seed = bytes.fromhex(args.seed) if args.seed else None
    km = keygen(args.security_bits, seed=seed)
    save_keys(km, args.out)
    print(f"wrote {args.out} (security={km.security_bits}, trapdoor_bits={km.trapdoor_bits})")
    return 0


def read_corpus_dir(path: str) -> dict[str, list[bytes]]:
    """Whitespace tokenization + normalization; fid = file name."""
    corpus: dict[str, list[bytes]] = {}
    names = sorted(
        n for n in os.listdir(path) if os.path.isfile(os.path.join(path, n))
    )
    for name in names:
        fid = name.encode("utf-8")
        if len(fid) > 64:
            raise FzError(f"file name {name!r} exceeds 64 bytes; rename it")
        with open(os.path.join(path, name), errors="replace") as fh:
            tokens = fh.read().split()
        seen = set()
        for token in tokens:
            try:
                word = normalize_keyword(token)
            except EmptyKeyword:
                continue
            if word in seen:
                continue
            seen.add(word)
            corpus.setdefault(word, []).append(fid)
    return corpus


def _cmd_build(args) -> int:
    km = load_keys(_keyfile(args))
    corpus = read_corpus_dir(args.corpus)
    if not corpus:
        raise FzError(f"no keywords found under {args.corpus}")
    if args.kind == "listing":
        index = build_listing_index(corpus, args.d, km, args.method)
        entries = len(index.table)
    elif args.kind == "trie":
        index = build_trie_index(corpus, args.d, km, args.method)
        entries = sum(1 for _ in index.leaves())
    else:
        index = build_auth_trie(corpus, args.d, km, args.method)
        entries = sum(1 for n in index.nodes() if n.records)
    save_index(index, args.out)
    print(
        f"wrote {args.out}: {args.kind} index, method={args.method}, d={args.d}, "
        f"{len(corpus)} keywords, {entries} entries"
    )
    return 0


def _cmd_serve(args) -> int:
    index = load_index(args.index)
    xi = None
    if args.blinded:
        xi = load_keys(_keyfile(args)).blind_key
    state = ServerState(index=index, xi=xi, epoch=args.epoch)
    server = SearchServer(state, host=args.host, port=args.port)
    mode = f"blinded epoch={args.epoch}" if xi else "single-user"
    print(f"serving {args.index} on {args.host}:{server.server_address[1]} ({mode})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def _search_common(args, force_verify: bool) -> int:
    km = load_keys(_keyfile(args))
    host, _, port = args.server.partition(":")
    with SearchClient(host or "127.0.0.1", int(port) if port else DEFAULT_PORT) as client:
        ack = client.hello()
        if ack.get("type") != "HelloAck":
            raise FzError(f"unexpected hello response: {ack}")
        word = normalize_keyword(args.word)
        req = make_request(word, args.k, km, ack["method"])
        epoch = 0
        wire_req = req
        if args.blinded or ack.get("blinded"):
            xi = km.blind_key
            if args.user:
                if not args.directory:
                    raise FzError("--user requires --directory")
                directory = load_directory(args.directory)
                xi = directory.unwrap(args.user, derive_user_key(km.record_key, args.user))
            epoch = args.epoch if args.epoch is not None else ack.get("epoch", 0)
            wire_req = blind_request(req, xi)
        want_proof = force_verify or args.verify
        resp = client.search(wire_req, epoch=epoch, want_proof=want_proof)
    if resp.get("type") == "ErrorResp":
        raise FzError(f"server error {resp.get('code')}: {resp.get('message')}")
    result = result_from_response(resp)
    if want_proof:
        if "proofs" not in resp:
            raise FzError("server returned no proofs; index is not verifiable")
        proofs = [decode_proof(bytes.fromhex(p), km.depth) for p in resp["proofs"]]
        verdict = verify(req, result, proofs, km)
        if not verdict.accepted:
            where = "" if verdict.failing_index is None else f" at proof {verdict.failing_index}"
            raise FzError(f"verification failed: {verdict.reason.value}{where}")
        print("verified: Ok")
    fids = sorted({decrypt_record(km, rec)[0] for rec in result.records})
    for fid in fids:
        print(fid.decode("utf-8", errors="backslashreplace"))
    if not fids:
        print("(no matches)", file=sys.stderr)
    return 0


def _cmd_search(args) -> int:
    return _search_common(args, force_verify=False)


def _cmd_verify(args) -> int:
    return _search_common(args, force_verify=True)


def _cmd_enroll(args) -> int:
    km = load_keys(_keyfile(args))
    if os.path.exists(args.directory):
        directory = load_directory(args.directory, current_xi=km.blind_key)
    else:
        directory = UserDirectory(current_xi=km.blind_key)
    user_key = derive_user_key(km.record_key, args.user)
    directory.enroll(args.user, user_key)
    save_directory(directory, args.directory)
    print(f"enrolled {args.user} (epoch {directory.epoch})")
    print(f"user-key: {user_key.hex()}")
    return 0


def _cmd_revoke(args) -> int:
    keyfile = _keyfile(args)
    km = load_keys(keyfile)
    directory = load_directory(args.directory, current_xi=km.blind_key)
    for uid in directory.wrapped:
        directory.user_keys[uid] = derive_user_key(km.record_key, uid)
    directory.revoke(args.user)
    save_directory(directory, args.directory)
    save_keys(dataclasses.replace(km, blind_key=directory.current_xi), keyfile)
    print(f"revoked {args.user}; directory now at epoch {directory.epoch}")
    print(f"updated blind key in {keyfile}; restart the server with the new epoch")
    return 0


def _cmd_bench(args) -> int:
    config = bench_mod.BenchConfig(
        keyword_counts=tuple(int(c) for c in args.counts.split(",")),
        methods=tuple(args.methods.split(",")),
        d_values=tuple(int(d) for d in args.d.split(",")),
        seed=args.seed,
        csv_path=args.csv,
        wordlist=args.words,
    )
    report = bench_mod.run_bench(config)
    print(f"wrote {args.csv} ({len(report.rows)} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fzsearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a key file")
    p.add_argument("--out", required=True)
    p.add_argument("--security-bits", type=int, default=128, choices=(128, 256))
    p.add_argument("--seed", help="hex seed for reproducible keys (tests only)")
    p.set_defaults(func=_cmd_keygen)

    p = sub.add_parser("build", help="build an index from a corpus directory")
    p.add_argument("--keys")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", default="wildcard", choices=("wildcard", "gram"))
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--kind", default="trie", choices=("listing", "trie", "auth"))
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("serve", help="host an index")
    p.add_argument("--index", required=True)
    p.add_argument("--keys")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--blinded", action="store_true", help="unblind requests with the blind key")
    p.add_argument("--epoch", type=int, default=0)
    p.set_defaults(func=_cmd_serve)

    for name, func in (("search", _cmd_search), ("verify", _cmd_verify)):
        p = sub.add_parser(name, help=f"{name} a word against a server")
        p.add_argument("word")
        p.add_argument("k", type=int)
        p.add_argument("--server", default=f"127.0.0.1:{DEFAULT_PORT}")
        p.add_argument("--keys")
        p.add_argument("--verify", action="store_true", help="check proofs")
        p.add_argument("--blinded", action="store_true")
        p.add_argument("--epoch", type=int)
        p.add_argument("--directory", help="user directory file for unwrapping the blind key")
        p.add_argument("--user", help="enrolled user id")
        p.set_defaults(func=func)

    p = sub.add_parser("enroll", help="enroll a user into the directory")
    p.add_argument("--keys")
    p.add_argument("--directory", required=True)
    p.add_argument("--user", required=True)
    p.set_defaults(func=_cmd_enroll)

    p = sub.add_parser("revoke", help="revoke a user and rotate the blind key")
    p.add_argument("--keys")
    p.add_argument("--directory", required=True)
    p.add_argument("--user", required=True)
    p.set_defaults(func=_cmd_revoke)

    p = sub.add_parser("bench", help="run the measurement harness")
    p.add_argument("--csv", default="bench.csv")
    p.add_argument("--counts", default="500,1000")
    p.add_argument("--methods", default="wildcard,gram")
    p.add_argument("--d", default="1,2")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--words", help="word list file, one word per line")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except FzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConnectionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
