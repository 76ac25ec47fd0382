"""Instrumented AVL tree and its action grammar.

Vocabulary: ``int0..int2`` take constants 0-19, ``avl0..avl1`` hold trees,
and trees support insert/delete/find over an int variable plus display().
Every branch outcome and function entry of the tree calls ``hit`` with a
stable point id; ``POINTS`` lists the whole universe.
"""

from __future__ import annotations

import re
from typing import Callable, Optional

from provtrail.sut.base import Sut, VarState, register

INT_VARS = ("int0", "int1", "int2")
AVL_VARS = ("avl0", "avl1")
CONSTANTS = tuple(range(20))
METHODS = ("insert", "delete", "find")

POINTS = (
    "stmt:init_entry",
    "stmt:insert_entry",
    "stmt:delete_entry",
    "stmt:find_entry",
    "stmt:display_entry",
    "stmt:display_node",
    "stmt:rotate_left",
    "stmt:rotate_right",
    "branch:insert_empty",
    "branch:insert_nonempty",
    "branch:insert_leaf",
    "branch:insert_go_left",
    "branch:insert_go_right",
    "branch:insert_duplicate",
    "branch:insert_balanced",
    "branch:insert_left_heavy",
    "branch:insert_right_heavy",
    "branch:insert_rotate_ll",
    "branch:insert_rotate_lr",
    "branch:insert_rotate_rr",
    "branch:insert_rotate_rl",
    "branch:delete_empty_tree",
    "branch:delete_nonempty",
    "branch:delete_not_found",
    "branch:delete_go_left",
    "branch:delete_go_right",
    "branch:delete_leaf",
    "branch:delete_only_left",
    "branch:delete_only_right",
    "branch:delete_two_children",
    "branch:delete_successor_direct",
    "branch:delete_successor_deep",
    "branch:delete_balanced",
    "branch:delete_left_heavy",
    "branch:delete_right_heavy",
    "branch:delete_rotate_ll",
    "branch:delete_rotate_lr",
    "branch:delete_rotate_rr",
    "branch:delete_rotate_rl",
    "branch:delete_child_even",
    "branch:rotate_left_inner",
    "branch:rotate_left_no_inner",
    "branch:rotate_right_inner",
    "branch:rotate_right_no_inner",
    "branch:find_go_left",
    "branch:find_go_right",
    "branch:find_hit",
    "branch:find_miss",
    "branch:display_empty",
    "branch:display_nonempty",
)


class InjectedFault(Exception):
    pass


class Node:
    __slots__ = ("key", "left", "right", "height")

    def __init__(self, key: int):
        self.key = key
        self.left: Optional[Node] = None
        self.right: Optional[Node] = None
        self.height = 1


def _h(node: Optional[Node]) -> int:
    return node.height if node else 0


def _balance(node: Optional[Node]) -> int:
    return _h(node.left) - _h(node.right) if node else 0


class AVLTree:
    def __init__(self, hit: Callable[[str], None], bug: bool = False):
        self.root: Optional[Node] = None
        self.bug = bug
        self.hit = hit
        hit("stmt:init_entry")

    def _update(self, node: Node) -> None:
        node.height = 1 + max(_h(node.left), _h(node.right))

    def _rotate_left(self, node: Node) -> Node:
        self.hit("stmt:rotate_left")
        pivot = node.right
        if pivot.left is not None:
            self.hit("branch:rotate_left_inner")
        else:
            self.hit("branch:rotate_left_no_inner")
        node.right = pivot.left
        pivot.left = node
        self._update(node)
        self._update(pivot)
        return pivot

    def _rotate_right(self, node: Node) -> Node:
        self.hit("stmt:rotate_right")
        pivot = node.left
        if pivot.right is not None:
            self.hit("branch:rotate_right_inner")
        else:
            self.hit("branch:rotate_right_no_inner")
        node.left = pivot.right
        pivot.right = node
        self._update(node)
        self._update(pivot)
        return pivot

    def _rebalance(self, node: Node, ctx: str) -> Node:
        hit = self.hit
        self._update(node)
        bal = _balance(node)
        if bal > 1:
            hit(f"branch:{ctx}_left_heavy")
            child = _balance(node.left)
            if child < 0:
                hit(f"branch:{ctx}_rotate_lr")
                node.left = self._rotate_left(node.left)
            else:
                if child == 0:
                    hit("branch:delete_child_even")
                hit(f"branch:{ctx}_rotate_ll")
            return self._rotate_right(node)
        if bal < -1:
            hit(f"branch:{ctx}_right_heavy")
            child = _balance(node.right)
            if child > 0:
                hit(f"branch:{ctx}_rotate_rl")
                node.right = self._rotate_right(node.right)
            else:
                if child == 0:
                    hit("branch:delete_child_even")
                hit(f"branch:{ctx}_rotate_rr")
            return self._rotate_left(node)
        hit(f"branch:{ctx}_balanced")
        return node

    def insert(self, key: int) -> None:
        self.hit("stmt:insert_entry")
        if self.root is None:
            self.hit("branch:insert_empty")
            self.root = Node(key)
            return
        self.hit("branch:insert_nonempty")
        self.root = self._insert(self.root, key)

    def _insert(self, node: Optional[Node], key: int) -> Node:
        if node is None:
            self.hit("branch:insert_leaf")
            return Node(key)
        if key < node.key:
            self.hit("branch:insert_go_left")
            node.left = self._insert(node.left, key)
        elif key > node.key:
            self.hit("branch:insert_go_right")
            node.right = self._insert(node.right, key)
        else:
            self.hit("branch:insert_duplicate")
            return node
        return self._rebalance(node, "insert")

    def delete(self, key: int) -> None:
        self.hit("stmt:delete_entry")
        if self.root is None:
            self.hit("branch:delete_empty_tree")
            return
        self.hit("branch:delete_nonempty")
        self.root = self._delete(self.root, key)

    def _delete(self, node: Optional[Node], key: int) -> Optional[Node]:
        hit = self.hit
        if node is None:
            hit("branch:delete_not_found")
            return None
        if key < node.key:
            hit("branch:delete_go_left")
            node.left = self._delete(node.left, key)
        elif key > node.key:
            hit("branch:delete_go_right")
            node.right = self._delete(node.right, key)
        else:
            if node.left is None and node.right is None:
                hit("branch:delete_leaf")
                return None
            if node.left is None:
                hit("branch:delete_only_right")
                return node.right
            if node.right is None:
                hit("branch:delete_only_left")
                return node.left
            hit("branch:delete_two_children")
            if self.bug:
                raise InjectedFault(f"delete of two-child node {node.key}")
            succ = node.right
            if succ.left is None:
                hit("branch:delete_successor_direct")
            else:
                hit("branch:delete_successor_deep")
                while succ.left is not None:
                    succ = succ.left
            node.key = succ.key
            node.right = self._delete(node.right, succ.key)
        return self._rebalance(node, "delete")

    def find(self, key: int) -> bool:
        self.hit("stmt:find_entry")
        node = self.root
        while node is not None:
            if key == node.key:
                self.hit("branch:find_hit")
                return True
            if key < node.key:
                self.hit("branch:find_go_left")
                node = node.left
            else:
                self.hit("branch:find_go_right")
                node = node.right
        self.hit("branch:find_miss")
        return False

    def display(self) -> str:
        self.hit("stmt:display_entry")
        if self.root is None:
            self.hit("branch:display_empty")
            return "()"
        self.hit("branch:display_nonempty")
        return self._show(self.root)

    def _show(self, node: Optional[Node]) -> str:
        if node is None:
            return "."
        self.hit("stmt:display_node")
        return f"({self._show(node.left)} {node.key} {self._show(node.right)})"

    def keys(self) -> list[int]:
        out: list[int] = []

        def walk(n: Optional[Node]) -> None:
            if n:
                walk(n.left)
                out.append(n.key)
                walk(n.right)

        walk(self.root)
        return out


_ASSIGN = re.compile(r"^(int\d) = (\d+)$")
_NEW = re.compile(r"^(avl\d) = avl\.AVLTree\(\)$")
_CALL = re.compile(r"^(avl\d)\.(insert|delete|find)\((int\d)\)$")
_DISPLAY = re.compile(r"^(avl\d)\.display\(\)$")


class AvlSut(Sut):
    name = "avl"
    variable_families = ("int", "avl")

    def _vocabulary(self) -> list[str]:
        acts = [f"{v} = {c}" for v in INT_VARS for c in CONSTANTS]
        acts += [f"{t} = avl.AVLTree()" for t in AVL_VARS]
        acts += [f"{t}.{m}({v})" for t in AVL_VARS for m in METHODS for v in INT_VARS]
        acts += [f"{t}.display()" for t in AVL_VARS]
        return acts

    def coverage_points(self) -> list[str]:
        return list(POINTS)

    def new_state(self, fault_injection: bool = False) -> VarState:
        return VarState(fault_injection=fault_injection)

    def reads(self, action: str) -> list[str]:
        if _ASSIGN.match(action) or _NEW.match(action):
            return []
        return self.variables_in(action)

    def _apply(self, state: VarState, action: str, hit: Callable[[str], None]) -> None:
        env = state.variables
        m = _ASSIGN.match(action)
        if m:
            env[m.group(1)] = int(m.group(2))
            return
        m = _NEW.match(action)
        if m:
            env[m.group(1)] = AVLTree(hit, bug=state.fault_injection)
            return
        m = _CALL.match(action)
        if m:
            tree = env[m.group(1)]
            # trees outlive a single action; route this action's hits
            tree.hit = hit
            getattr(tree, m.group(2))(env[m.group(3)])
            return
        m = _DISPLAY.match(action)
        tree = env[m.group(1)]
        tree.hit = hit
        tree.display()

    def lowerings(self, action: str) -> list[str]:
        m = _ASSIGN.match(action)
        if not m:
            return []
        return [f"{m.group(1)} = {c}" for c in CONSTANTS if c < int(m.group(2))]


AVL = register(AvlSut())
