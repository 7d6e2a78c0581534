#!/usr/bin/env python3
"""Reference sandbox worker.

Speaks the engine's newline-delimited JSON protocol on stdin/stdout:

  hello                 -> hello {protocol, mode, game}
  load {source}         -> load_result {ok, violations}
  reset {snapshot}      -> ack
  act {agent, step, delta | snapshot}
                        -> action {value} | mutations {value, ops} | error {message}
  bye                   -> bye

Every reply echoes the request id. A frame that cannot be parsed gets an
error reply with id null and the session keeps going.
"""

import argparse
import ast
import builtins
import json
import os
import sys
import time
import traceback
from collections import deque

import numpy as np

PROTOCOL = 1

DENIED_NAMES = {
    "eval", "exec", "open", "__import__", "compile", "globals", "locals", "vars",
    "getattr", "setattr", "delattr", "input", "breakpoint", "memoryview", "exit", "quit",
}


# --------------------------------------------------------------------------
# static check


def _root_name(node):
    while isinstance(node, (ast.Attribute, ast.Subscript, ast.Starred)):
        node = node.value
    return node.id if isinstance(node, ast.Name) else None


def _write_targets(node):
    if isinstance(node, (ast.Assign,)):
        return node.targets
    if isinstance(node, (ast.AugAssign, ast.AnnAssign)):
        return [node.target]
    if isinstance(node, ast.Delete):
        return node.targets
    return []


def _flatten_targets(targets):
    for t in targets:
        if isinstance(t, (ast.Tuple, ast.List)):
            yield from _flatten_targets(t.elts)
        else:
            yield t


def static_check(source, mutating, extra_denied=()):
    try:
        tree = ast.parse(source)
    except SyntaxError as e:
        return ["syntax error at line %s, column %s: %s" % (e.lineno, e.offset, e.msg)]

    denied = DENIED_NAMES | set(extra_denied)
    out = []
    for node in ast.walk(tree):
        line = getattr(node, "lineno", "?")
        if isinstance(node, (ast.Import, ast.ImportFrom)):
            out.append("import statement at line %s (modules are pre-loaded)" % line)
        elif isinstance(node, ast.Name) and node.id in denied:
            out.append("use of denied name '%s' at line %s" % (node.id, line))
        elif isinstance(node, ast.Name) and node.id.startswith("__") and node.id.endswith("__"):
            out.append("dunder name '%s' at line %s" % (node.id, line))
        elif isinstance(node, ast.Attribute) and node.attr.startswith("__") and node.attr.endswith("__"):
            out.append("dunder attribute access '.%s' at line %s" % (node.attr, line))
        if not mutating:
            for t in _flatten_targets(_write_targets(node)):
                if isinstance(t, (ast.Attribute, ast.Subscript)) and _root_name(t) == "env":
                    out.append("write to env state at line %s (env is read-only)" % line)

    ok_sig = False
    for node in tree.body:
        if isinstance(node, ast.FunctionDef) and node.name == "policy":
            a = node.args
            if len(a.posonlyargs) + len(a.args) == 2 and not a.vararg and not a.kwonlyargs:
                ok_sig = True
    if not ok_sig:
        out.append("no top-level function 'policy(env, agent_id)' with two positional parameters")
    return out


# --------------------------------------------------------------------------
# helper library (mirrors the engine's helpers: N,E,S,W expansion order,
# only walls block, the first target dequeued wins)

class Orientation:
    N, E, S, W = 0, 1, 2, 3


class Action:
    FORWARD, BACKWARD, STEP_LEFT, STEP_RIGHT = 0, 1, 2, 3
    ROTATE_LEFT, ROTATE_RIGHT, BEAM, STAND = 4, 5, 6, 7


class CleanupAction(Action):
    CLEAN = 8


NUM_ACTIONS = 8
NUM_CLEANUP_ACTIONS = 9
_ROTATIONS = {0: (-1, 0), 1: (0, 1), 2: (1, 0), 3: (0, -1)}
_NEIGHBORS = ((-1, 0), (0, 1), (1, 0), (0, -1))


def _bfs(env, agent_id, targets):
    """First step toward the nearest cell index in `targets` (a container)."""
    if int(env.agent_timeout[agent_id]) > 0:
        return None
    w = env.width
    nbrs = env._nbrs
    start = int(env.agent_pos[agent_id][0]) * w + int(env.agent_pos[agent_id][1])
    if start in targets:
        return (0, 0)
    first = [-1] * (env.height * w)
    first[start] = 4
    q = deque()
    for k, j in nbrs[start]:
        first[j] = k
        q.append(j)
    while q:
        cur = q.popleft()
        k = first[cur]
        if cur in targets:
            return _NEIGHBORS[k]
        for _, j in nbrs[cur]:
            if first[j] < 0:
                first[j] = k
                q.append(j)
    return None


def _alive_targets(env):
    cache = env._cache
    if cache is not None and "alive" in cache:
        return cache["alive"]
    alive = set(env._apple_flat[env.apple_alive].tolist())
    if cache is not None:
        cache["alive"] = alive
    return alive


def bfs_nearest_apple(env, agent_id):
    alive = _alive_targets(env)
    if not alive:
        return None
    return _bfs(env, agent_id, alive)


def bfs_to_target_set(env, agent_id, target_set):
    h, w = env.height, env.width
    targets = {int(r) * w + int(c) for r, c in target_set if 0 <= int(r) < h and 0 <= int(c) < w}
    if not targets:
        return None
    return _bfs(env, agent_id, targets)


def bfs_toward(env, agent_id, target_r, target_c):
    r, c = int(target_r), int(target_c)
    if not (0 <= r < env.height and 0 <= c < env.width):
        return None
    return _bfs(env, agent_id, (r * env.width + c,))


def direction_to_action(dr, dc, orientation):
    dr, dc, o = int(dr), int(dc), int(orientation)
    if dr == 0 and dc == 0:
        return Action.STAND
    if abs(dr) + abs(dc) != 1:
        raise ValueError("direction_to_action: (%d,%d) is not a unit step" % (dr, dc))
    if (dr, dc) == _ROTATIONS[o]:
        return Action.FORWARD
    if (dr, dc) == _ROTATIONS[(o + 2) % 4]:
        return Action.BACKWARD
    if (dr, dc) == _ROTATIONS[(o + 3) % 4]:
        return Action.STEP_LEFT
    return Action.STEP_RIGHT


def get_opponents(env, agent_id):
    return [j for j in range(env.n_agents) if j != agent_id and int(env.agent_timeout[j]) == 0]


def _footprint(env, ar, ac, orient_val):
    fr, fc = _ROTATIONS[int(orient_val)]
    rr, rc = _ROTATIONS[(int(orient_val) + 1) % 4]
    half = env.beam_width // 2
    walls = env._wall_rows
    reach = {}
    for lane in range(-half, half + 1):
        n = 0
        for d in range(1, env.beam_length + 1):
            r, c = ar + d * fr + lane * rr, ac + d * fc + lane * rc
            if not (0 <= r < env.height and 0 <= c < env.width) or walls[r][c]:
                break
            n = d
        reach[lane] = n
    out = []
    for d in range(1, env.beam_length + 1):
        for lane in range(-half, half + 1):
            if d <= reach[lane]:
                out.append((ar + d * fr + lane * rr, ac + d * fc + lane * rc))
    return out


def _beam_targets_for_orient(env, ar, ac, orient_val, opponents):
    if not opponents:
        return []
    out = []
    for cell in _footprint(env, int(ar), int(ac), orient_val):
        for j in opponents:
            if int(env.agent_timeout[j]) == 0 and (int(env.agent_pos[j][0]), int(env.agent_pos[j][1])) == cell:
                out.append(j)
    return out


def _rotation_distance(cur, target):
    diff = (int(target) - int(cur)) % 4
    return 1 if diff == 3 else diff


def greedy_action(env, agent_id):
    if int(env.agent_timeout[agent_id]) > 0:
        return Action.STAND
    result = bfs_nearest_apple(env, agent_id)
    if result is None:
        return Action.STAND
    return direction_to_action(result[0], result[1], int(env.agent_orient[agent_id]))


def exploitative_action(env, agent_id):
    if int(env.agent_timeout[agent_id]) > 0:
        return Action.STAND
    ar, ac = int(env.agent_pos[agent_id][0]), int(env.agent_pos[agent_id][1])
    if _beam_targets_for_orient(env, ar, ac, int(env.agent_orient[agent_id]), get_opponents(env, agent_id)):
        return Action.BEAM
    return greedy_action(env, agent_id)


HELPERS = {
    "np": np, "deque": deque,
    "Action": Action, "CleanupAction": CleanupAction, "Orientation": Orientation,
    "_ROTATIONS": _ROTATIONS, "NUM_ACTIONS": NUM_ACTIONS, "NUM_CLEANUP_ACTIONS": NUM_CLEANUP_ACTIONS,
    "bfs_nearest_apple": bfs_nearest_apple, "bfs_to_target_set": bfs_to_target_set,
    "bfs_toward": bfs_toward, "direction_to_action": direction_to_action,
    "get_opponents": get_opponents, "_beam_targets_for_orient": _beam_targets_for_orient,
    "_rotation_distance": _rotation_distance, "greedy_action": greedy_action,
    "exploitative_action": exploitative_action,
}

_SAFE_BUILTINS = {
    name: getattr(builtins, name)
    for name in (
        "abs", "all", "any", "bool", "dict", "divmod", "enumerate", "filter", "float", "frozenset",
        "int", "isinstance", "len", "list", "map", "max", "min", "pow", "range", "reversed", "round",
        "set", "sorted", "sum", "tuple", "zip", "iter", "next", "hash", "repr", "str",
        "Exception", "ValueError", "KeyError", "IndexError", "TypeError", "RuntimeError",
        "ZeroDivisionError", "StopIteration", "AttributeError", "__build_class__",
    )
}


def _stderr_print(*args, **kwargs):
    kwargs["file"] = sys.stderr
    print(*args, **kwargs)


_SAFE_BUILTINS["print"] = _stderr_print


# --------------------------------------------------------------------------
# environment proxy

DYNAMIC = ("step", "agent_pos", "agent_orient", "agent_timeout", "agent_beam_hits", "apple_alive", "waste")


class EnvProxy:
    def __init__(self, fields, writable):
        object.__setattr__(self, "_writable", writable)
        for k, v in fields.items():
            object.__setattr__(self, k, v)

    def __setattr__(self, name, value):
        if not self._writable:
            raise AttributeError("env is read-only: cannot set '%s'" % name)
        object.__setattr__(self, name, value)

    def __delattr__(self, name):
        raise AttributeError("env attributes cannot be deleted")


def _freeze(a):
    a.flags.writeable = False
    return a


class World:
    def __init__(self, game):
        self.game = game
        self.static = None
        self.dyn = None
        self._ro_proxy = None

    def load_snapshot(self, snap):
        h, w = int(snap["height"]), int(snap["width"])
        walls = np.zeros((h, w), dtype=bool)
        for r, c in snap["walls"]:
            walls[r, c] = True
        apple_pos = np.array(snap["_apple_pos"], dtype=np.int64).reshape(-1, 2)
        walls.flags.writeable = False
        apple_pos.flags.writeable = False
        self.static = {
            "height": h, "width": w,
            "n_agents": int(snap["n_agents"]), "n_apples": int(snap["n_apples"]),
            "beam_length": int(snap["beam_length"]), "beam_width": int(snap["beam_width"]),
            "hits_to_tag": int(snap["hits_to_tag"]), "timeout_steps": int(snap["timeout_steps"]),
            "walls": walls, "_apple_pos": apple_pos,
            "_wall_rows": tuple(tuple(bool(x) for x in row) for row in walls),
            "_apple_flat": _freeze(apple_pos[:, 0] * w + apple_pos[:, 1]),
        }
        nbrs = []
        for r in range(h):
            for c in range(w):
                nbrs.append(tuple(
                    (k, (r + dr) * w + (c + dc)) for k, (dr, dc) in enumerate(_NEIGHBORS)
                    if 0 <= r + dr < h and 0 <= c + dc < w and not walls[r + dr, c + dc]))
        self.static["_nbrs"] = tuple(nbrs)
        if self.game == "cleanup":
            self.static["river_cells_set"] = frozenset(tuple(c) for c in snap["river_cells_set"])
            self.static["stream_cells_set"] = frozenset(tuple(c) for c in snap["stream_cells_set"])
        self.dyn = {}
        self.apply_delta({k: snap[k] for k in DYNAMIC if k in snap})

    def apply_delta(self, delta):
        h, w = self.static["height"], self.static["width"]
        for k, v in delta.items():
            if k == "step":
                self.dyn[k] = int(v)
            elif k == "agent_pos":
                self.dyn[k] = _freeze(np.array(v, dtype=np.int64).reshape(-1, 2))
            elif k == "apple_alive":
                self.dyn[k] = _freeze(np.array(v, dtype=bool))
            elif k == "waste":
                grid = np.zeros((h, w), dtype=bool)
                for r, c in v:
                    grid[r, c] = True
                self.dyn[k] = _freeze(grid)
            elif k in ("agent_orient", "agent_timeout", "agent_beam_hits"):
                self.dyn[k] = _freeze(np.array(v, dtype=np.int64))
            else:
                raise KeyError("unknown snapshot field '%s'" % k)
        self._ro_proxy = None

    def proxy(self, writable):
        if not writable:
            if self._ro_proxy is None:
                # Views of frozen arrays: the policy cannot flip them writable.
                fields = {k: v.view() if isinstance(v, np.ndarray) else v for k, v in self.static.items()}
                for k, v in self.dyn.items():
                    fields[k] = v.view() if isinstance(v, np.ndarray) else v
                fields["_cache"] = {}
                self._ro_proxy = EnvProxy(fields, False)
            return self._ro_proxy
        fields = {k: v.copy() if isinstance(v, np.ndarray) else v for k, v in self.static.items()}
        if self.game == "cleanup":
            fields["river_cells_set"] = set(self.static["river_cells_set"])
            fields["stream_cells_set"] = set(self.static["stream_cells_set"])
        for k, v in self.dyn.items():
            fields[k] = v.copy() if isinstance(v, np.ndarray) else v
        fields["_cache"] = None
        return EnvProxy(fields, True)

    def diff(self, env):
        """Mutation ops that turn the canonical state into the proxy's state."""
        ops = []
        n = self.static["n_agents"]

        def arr(name, shape, dtype):
            v = np.asarray(getattr(env, name), dtype=dtype)
            if v.shape != shape:
                raise ValueError("env.%s changed shape" % name)
            return v

        pos = arr("agent_pos", (n, 2), np.int64)
        for i in range(n):
            if tuple(pos[i]) != tuple(self.dyn["agent_pos"][i]):
                ops.append({"op": "set_agent_pos", "agent": i, "cell": [int(pos[i][0]), int(pos[i][1])]})
        for name, op in (("agent_orient", "set_agent_orient"), ("agent_timeout", "set_agent_timeout"),
                         ("agent_beam_hits", "set_agent_beam_hits")):
            v = arr(name, (n,), np.int64)
            for i in range(n):
                if v[i] != self.dyn[name][i]:
                    ops.append({"op": op, "agent": i, "value": int(v[i])})
        alive = arr("apple_alive", self.dyn["apple_alive"].shape, bool)
        for k in np.flatnonzero(alive != self.dyn["apple_alive"]):
            ops.append({"op": "set_apple_alive", "spawn": int(k), "value": bool(alive[k])})
        if "waste" in self.dyn:
            waste = arr("waste", self.dyn["waste"].shape, bool)
            for r, c in zip(*np.nonzero(waste != self.dyn["waste"])):
                ops.append({"op": "set_waste", "cell": [int(r), int(c)], "value": bool(waste[r, c])})
        if not np.array_equal(np.asarray(env._apple_pos), self.static["_apple_pos"]):
            raise ValueError("env._apple_pos cannot be changed: spawn positions are fixed by the map")
        if not np.array_equal(np.asarray(env.walls), self.static["walls"]):
            raise ValueError("env.walls cannot be changed")
        return ops


# --------------------------------------------------------------------------
# session


class Session:
    def __init__(self, mode, game, extra_denied):
        self.mutating = mode == "mutating"
        self.game = game
        self.extra_denied = extra_denied
        self.world = World(game)
        self.policy = None
        self.max_action = 7 if game == "gathering" else 8

    def handle(self, msg):
        kind = msg.get("type")
        if kind == "hello":
            return {"type": "hello", "protocol": PROTOCOL,
                    "mode": "mutating" if self.mutating else "readonly", "game": self.game}
        if kind == "load":
            return self.load(msg.get("source"))
        if kind == "reset":
            self.world.load_snapshot(msg["snapshot"])
            return {"type": "ack"}
        if kind == "act":
            return self.act(msg)
        if kind == "bye":
            return {"type": "bye"}
        return {"type": "error", "message": "unknown message type %r" % (kind,)}

    def load(self, source):
        if not isinstance(source, str) or not source.strip():
            return {"type": "load_result", "ok": False, "violations": ["empty source"]}
        violations = static_check(source, self.mutating, self.extra_denied)
        if violations:
            return {"type": "load_result", "ok": False, "violations": violations}
        ns = dict(HELPERS)
        ns["__builtins__"] = dict(_SAFE_BUILTINS)
        ns["__name__"] = "policy_module"
        try:
            exec(compile(source, "<policy>", "exec"), ns)
        except Exception:
            return {"type": "load_result", "ok": False,
                    "violations": ["error while loading the policy:\n" + traceback.format_exc(limit=3)]}
        self.policy = ns["policy"]
        return {"type": "load_result", "ok": True, "violations": []}

    def act(self, msg):
        if self.policy is None:
            return {"type": "error", "message": "no policy loaded"}
        if self.world.static is None and "snapshot" not in msg:
            return {"type": "error", "message": "act before reset"}
        if "snapshot" in msg:
            self.world.load_snapshot(msg["snapshot"])
        elif "delta" in msg:
            self.world.apply_delta(msg["delta"])
        agent = msg.get("agent")
        if not isinstance(agent, int) or not 0 <= agent < self.world.static["n_agents"]:
            return {"type": "error", "message": "act: bad agent index %r" % (agent,)}
        env = self.world.proxy(self.mutating)
        t0 = time.perf_counter()
        try:
            result = self.policy(env, agent)
        except Exception:
            return {"type": "error", "message": traceback.format_exc(limit=4)}
        reply = {"type": "action", "elapsed_us": int((time.perf_counter() - t0) * 1e6)}
        if isinstance(result, (int, np.integer)) and not isinstance(result, (bool, np.bool_)):
            reply["value"] = int(result)
        else:
            reply["value"] = None
            reply["returned_type"] = type(result).__name__
            reply["returned"] = repr(result)[:200]
        if self.mutating:
            try:
                ops = self.world.diff(env)
            except Exception as e:
                return {"type": "error", "message": "unsupported mutation: %s" % e}
            if ops:
                reply["type"] = "mutations"
                reply["ops"] = ops
        return reply


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mode", choices=("readonly", "mutating"), required=True)
    ap.add_argument("--game", choices=("gathering", "cleanup"), required=True)
    ap.add_argument("--deny", default="", help="extra comma-separated denied names")
    args = ap.parse_args()

    session = Session(args.mode, args.game, [d for d in args.deny.split(",") if d])
    pending = b""
    while True:
        chunk = os.read(0, 1 << 16)
        if not chunk:
            break
        pending += chunk
        *lines, pending = pending.split(b"\n")
        # Requests that arrived together are answered together; each act
        # reply carries its own elapsed time for the engine's budget check.
        out = []
        for line in lines:
            if not line.strip():
                continue
            reply = _serve_frame(session, line)
            out.append(_encode_reply(reply))
            if reply["type"] == "bye":
                _write_all(b"".join(out))
                return
        _write_all(b"".join(out))


def _serve_frame(session, line):
    mid = None
    try:
        msg = _DECODE(line.decode("utf-8"))
        if not isinstance(msg, dict):
            raise ValueError("frame is not a JSON object")
        mid = msg.get("id")
        reply = session.handle(msg)
    except Exception as e:
        reply = {"type": "error", "message": "malformed frame: %s: %s" % (type(e).__name__, e)}
    return {"id": mid if isinstance(mid, int) and not isinstance(mid, bool) else None, **reply}


_DECODE = json.JSONDecoder().decode
_ENCODE = json.JSONEncoder().encode


def _encode_reply(reply):
    if reply["type"] == "action" and len(reply) == 4 and reply["value"] is not None and reply["id"] is not None:
        return b'{"id": %d, "type": "action", "elapsed_us": %d, "value": %d}\n' % (
            reply["id"], reply["elapsed_us"], reply["value"])
    return _ENCODE(reply).encode() + b"\n"


def _write_all(data):
    while data:
        n = os.write(1, data)
        data = data[n:]


if __name__ == "__main__":
    main()
