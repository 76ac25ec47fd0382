"""In-memory filesystem model with a fixed path vocabulary.

Paths are the 15 non-empty subsets of ``{a, b, c, d}`` written as nested
directories in alphabetical order (``/a``, ``/a/b``, ... ``/a/b/c/d``), so
the vocabulary is closed under taking parents. Operations that would raise
``OSError`` on a real filesystem raise ``FsError`` here; those are ordinary
outcomes with their own coverage points, not test failures.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from provtrail.sut.base import Sut, VarState, register

SEGMENTS = ("a", "b", "c", "d")
PATHS = tuple(
    "/" + "/".join(combo)
    for depth in range(1, 5)
    for combo in itertools.combinations(SEGMENTS, depth)
)
HANDLE_VARS = ("f0", "f1")
MODES = ("r", "w")
WRITE_SIZES = (0, 1, 2, 3)
MAX_SYMLINK_DEPTH = 8

POINTS = (
    "stmt:mkdir_entry",
    "stmt:makedirs_entry",
    "stmt:rmdir_entry",
    "stmt:remove_entry",
    "stmt:rename_entry",
    "stmt:symlink_entry",
    "stmt:open_entry",
    "stmt:close_entry",
    "stmt:write_entry",
    "branch:resolve_symlink",
    "branch:resolve_loop",
    "branch:resolve_not_dir",
    "branch:mkdir_ok",
    "branch:mkdir_exists",
    "branch:mkdir_no_parent",
    "branch:makedirs_create",
    "branch:makedirs_existing_dir",
    "branch:makedirs_not_dir",
    "branch:makedirs_exists",
    "branch:makedirs_ok",
    "branch:rmdir_ok",
    "branch:rmdir_missing",
    "branch:rmdir_not_dir",
    "branch:rmdir_not_empty",
    "branch:remove_file",
    "branch:remove_symlink",
    "branch:remove_missing",
    "branch:remove_is_dir",
    "branch:remove_open_file",
    "branch:rename_file",
    "branch:rename_dir",
    "branch:rename_symlink",
    "branch:rename_src_missing",
    "branch:rename_dst_no_parent",
    "branch:rename_same",
    "branch:rename_into_self",
    "branch:rename_replace_file",
    "branch:rename_replace_dir",
    "branch:rename_dst_not_empty",
    "branch:rename_dir_over_file",
    "branch:rename_file_over_dir",
    "branch:symlink_ok",
    "branch:symlink_dangling",
    "branch:symlink_exists",
    "branch:symlink_no_parent",
    "branch:open_r_ok",
    "branch:open_r_missing",
    "branch:open_w_create",
    "branch:open_w_truncate",
    "branch:open_w_no_parent",
    "branch:open_isdir",
    "branch:open_via_symlink",
    "branch:close_ok",
    "branch:close_twice",
    "branch:write_ok",
    "branch:write_zero",
    "branch:write_closed",
    "branch:write_readonly",
    "branch:write_unlinked",
)


class FsError(Exception):
    def __init__(self, code: str, path: str):
        super().__init__(f"{code}: {path}")
        self.code = code


@dataclass(eq=False)
class File:
    size: int = 0
    linked: bool = True


@dataclass(eq=False)
class Dir:
    children: dict = field(default_factory=dict)


@dataclass(eq=False)
class Symlink:
    target: str


Node = Union[File, Dir, Symlink]


@dataclass(eq=False)
class Handle:
    file: File
    mode: str
    closed: bool = False


def _parts(path: str) -> list[str]:
    return [p for p in path.split("/") if p]


def _join(parts: list[str]) -> str:
    return "/" + "/".join(parts)


class FakeFS:
    def __init__(self, hit: Callable[[str], None]):
        self.root = Dir()
        self.hit = hit

    # -- resolution --------------------------------------------------------
    def _resolve(self, parts: list[str], follow_last: bool, depth: int = 0) -> Optional[Node]:
        """Node at ``parts`` or None; intermediate symlinks are always followed."""
        if depth > MAX_SYMLINK_DEPTH:
            self.hit("branch:resolve_loop")
            raise FsError("ELOOP", _join(parts))
        node: Node = self.root
        for i, part in enumerate(parts):
            if isinstance(node, Symlink):
                self.hit("branch:resolve_symlink")
                node = self._resolve(_parts(node.target), True, depth + 1)
                if node is None:
                    return None
            if not isinstance(node, Dir):
                self.hit("branch:resolve_not_dir")
                raise FsError("ENOTDIR", _join(parts[:i]))
            child = node.children.get(part)
            if child is None:
                return None
            node = child
        if follow_last and isinstance(node, Symlink):
            self.hit("branch:resolve_symlink")
            return self._resolve(_parts(node.target), True, depth + 1)
        return node

    def _parent(self, path: str) -> tuple[Optional[Dir], str]:
        parts = _parts(path)
        parent = self._resolve(parts[:-1], True)
        if parent is not None and not isinstance(parent, Dir):
            self.hit("branch:resolve_not_dir")
            raise FsError("ENOTDIR", _join(parts[:-1]))
        return parent, parts[-1]

    # -- operations --------------------------------------------------------
    def mkdir(self, path: str) -> None:
        self.hit("stmt:mkdir_entry")
        parent, name = self._parent(path)
        if parent is None:
            self.hit("branch:mkdir_no_parent")
            raise FsError("ENOENT", path)
        if name in parent.children:
            self.hit("branch:mkdir_exists")
            raise FsError("EEXIST", path)
        self.hit("branch:mkdir_ok")
        parent.children[name] = Dir()

    def makedirs(self, path: str) -> None:
        self.hit("stmt:makedirs_entry")
        parts = _parts(path)
        node: Node = self.root
        for i, part in enumerate(parts):
            child = node.children.get(part)
            if isinstance(child, Symlink):
                child = self._resolve(parts[: i + 1], True)
            if child is None:
                self.hit("branch:makedirs_create")
                child = node.children[part] = Dir()
            elif not isinstance(child, Dir):
                self.hit("branch:makedirs_not_dir")
                raise FsError("ENOTDIR", _join(parts[: i + 1]))
            elif i == len(parts) - 1:
                self.hit("branch:makedirs_exists")
                raise FsError("EEXIST", path)
            else:
                self.hit("branch:makedirs_existing_dir")
            node = child
        self.hit("branch:makedirs_ok")

    def rmdir(self, path: str) -> None:
        self.hit("stmt:rmdir_entry")
        parent, name = self._parent(path)
        node = parent.children.get(name) if parent else None
        if node is None:
            self.hit("branch:rmdir_missing")
            raise FsError("ENOENT", path)
        if not isinstance(node, Dir):
            self.hit("branch:rmdir_not_dir")
            raise FsError("ENOTDIR", path)
        if node.children:
            self.hit("branch:rmdir_not_empty")
            raise FsError("ENOTEMPTY", path)
        self.hit("branch:rmdir_ok")
        del parent.children[name]

    def remove(self, path: str, open_files: set) -> None:
        self.hit("stmt:remove_entry")
        parent, name = self._parent(path)
        node = parent.children.get(name) if parent else None
        if node is None:
            self.hit("branch:remove_missing")
            raise FsError("ENOENT", path)
        if isinstance(node, Dir):
            self.hit("branch:remove_is_dir")
            raise FsError("EISDIR", path)
        if isinstance(node, Symlink):
            self.hit("branch:remove_symlink")
        else:
            self.hit("branch:remove_file")
            if id(node) in open_files:
                self.hit("branch:remove_open_file")
            node.linked = False
        del parent.children[name]

    def rename(self, src: str, dst: str) -> None:
        self.hit("stmt:rename_entry")
        sparent, sname = self._parent(src)
        node = sparent.children.get(sname) if sparent else None
        if node is None:
            self.hit("branch:rename_src_missing")
            raise FsError("ENOENT", src)
        dparent, dname = self._parent(dst)
        if dparent is None:
            self.hit("branch:rename_dst_no_parent")
            raise FsError("ENOENT", dst)
        if dparent is sparent and dname == sname:
            self.hit("branch:rename_same")
            return
        if isinstance(node, Dir) and (dst + "/").startswith(src + "/"):
            self.hit("branch:rename_into_self")
            raise FsError("EINVAL", dst)
        existing = dparent.children.get(dname)
        if existing is not None:
            if isinstance(existing, Dir):
                if not isinstance(node, Dir):
                    self.hit("branch:rename_file_over_dir")
                    raise FsError("EISDIR", dst)
                if existing.children:
                    self.hit("branch:rename_dst_not_empty")
                    raise FsError("ENOTEMPTY", dst)
                self.hit("branch:rename_replace_dir")
            elif isinstance(node, Dir):
                self.hit("branch:rename_dir_over_file")
                raise FsError("ENOTDIR", dst)
            else:
                self.hit("branch:rename_replace_file")
                if isinstance(existing, File):
                    existing.linked = False
        if isinstance(node, Dir):
            self.hit("branch:rename_dir")
        elif isinstance(node, Symlink):
            self.hit("branch:rename_symlink")
        else:
            self.hit("branch:rename_file")
        del sparent.children[sname]
        dparent.children[dname] = node

    def symlink(self, target: str, link: str) -> None:
        self.hit("stmt:symlink_entry")
        parent, name = self._parent(link)
        if parent is None:
            self.hit("branch:symlink_no_parent")
            raise FsError("ENOENT", link)
        if name in parent.children:
            self.hit("branch:symlink_exists")
            raise FsError("EEXIST", link)
        try:
            dangling = self._resolve(_parts(target), True) is None
        except FsError:
            dangling = True
        if dangling:
            self.hit("branch:symlink_dangling")
        self.hit("branch:symlink_ok")
        parent.children[name] = Symlink(target)

    def open(self, path: str, mode: str) -> Handle:
        self.hit("stmt:open_entry")
        parent, name = self._parent(path)
        raw = parent.children.get(name) if parent else None
        if isinstance(raw, Symlink):
            self.hit("branch:open_via_symlink")
            node = self._resolve(_parts(path), True)
        else:
            node = raw
        if isinstance(node, Dir):
            self.hit("branch:open_isdir")
            raise FsError("EISDIR", path)
        if mode == "r":
            if node is None:
                self.hit("branch:open_r_missing")
                raise FsError("ENOENT", path)
            self.hit("branch:open_r_ok")
            return Handle(node, "r")
        if node is not None:
            self.hit("branch:open_w_truncate")
            node.size = 0
            return Handle(node, "w")
        if isinstance(raw, Symlink):
            # dangling link: create the target
            parent, name = self._parent(raw.target)
        if parent is None:
            self.hit("branch:open_w_no_parent")
            raise FsError("ENOENT", path)
        self.hit("branch:open_w_create")
        f = parent.children[name] = File()
        return Handle(f, "w")

    def close(self, h: Handle) -> None:
        self.hit("stmt:close_entry")
        if h.closed:
            self.hit("branch:close_twice")
            return
        self.hit("branch:close_ok")
        h.closed = True

    def write(self, h: Handle, n: int) -> int:
        self.hit("stmt:write_entry")
        if h.closed:
            self.hit("branch:write_closed")
            raise FsError("EBADF", "<closed>")
        if h.mode != "w":
            self.hit("branch:write_readonly")
            raise FsError("EBADF", "<read-only>")
        if not h.file.linked:
            self.hit("branch:write_unlinked")
        if n == 0:
            self.hit("branch:write_zero")
            return 0
        self.hit("branch:write_ok")
        h.file.size += n
        return n


@dataclass
class FsState(VarState):
    fs: Optional[FakeFS] = None


_Q = r'"(/[a-d/]*)"'
_OPEN = re.compile(rf'^(f\d) = fs\.open\({_Q},"([rw])"\)$')
_ONE = re.compile(rf"^fs\.(mkdir|makedirs|rmdir|remove)\({_Q}\)$")
_TWO = re.compile(rf"^fs\.(rename|symlink)\({_Q},{_Q}\)$")
_CLOSE = re.compile(r"^fs\.close\((f\d)\)$")
_WRITE = re.compile(r"^fs\.write\((f\d),(\d+)\)$")


class FsSut(Sut):
    name = "fs"
    variable_families = ("f",)

    def _vocabulary(self) -> list[str]:
        acts = []
        for op in ("mkdir", "makedirs", "rmdir", "remove"):
            acts += [f'fs.{op}("{p}")' for p in PATHS]
        for op in ("rename", "symlink"):
            acts += [f'fs.{op}("{p}","{q}")' for p in PATHS for q in PATHS]
        acts += [f'{v} = fs.open("{p}","{m}")' for v in HANDLE_VARS for p in PATHS for m in MODES]
        acts += [f"fs.close({v})" for v in HANDLE_VARS]
        acts += [f"fs.write({v},{n})" for v in HANDLE_VARS for n in WRITE_SIZES]
        return acts

    def coverage_points(self) -> list[str]:
        return list(POINTS)

    def new_state(self, fault_injection: bool = False) -> FsState:
        return FsState(fault_injection=fault_injection)

    def reads(self, action: str) -> list[str]:
        if _OPEN.match(action):
            return []
        return self.variables_in(action)

    def _apply(self, state: FsState, action: str, hit: Callable[[str], None]) -> None:
        if state.fs is None:
            state.fs = FakeFS(hit)
        fs = state.fs
        fs.hit = hit
        env = state.variables
        try:
            m = _OPEN.match(action)
            if m:
                env[m.group(1)] = fs.open(m.group(2), m.group(3))
                return
            m = _ONE.match(action)
            if m:
                op, path = m.groups()
                if op == "remove":
                    open_files = {id(h.file) for h in env.values() if not h.closed}
                    fs.remove(path, open_files)
                else:
                    getattr(fs, op)(path)
                return
            m = _TWO.match(action)
            if m:
                getattr(fs, m.group(1))(m.group(2), m.group(3))
                return
            m = _CLOSE.match(action)
            if m:
                fs.close(env[m.group(1)])
                return
            m = _WRITE.match(action)
            fs.write(env[m.group(1)], int(m.group(2)))
        except FsError:
            pass

    def lowerings(self, action: str) -> list[str]:
        m = _WRITE.match(action)
        if not m:
            return []
        return [f"fs.write({m.group(1)},{n})" for n in WRITE_SIZES if n < int(m.group(2))]


FS = register(FsSut())
