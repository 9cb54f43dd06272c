"""Small hand-written IR programs used by tests, scripts and the CLI docs."""
from __future__ import annotations

from .text import parse_module

# Counts how often character code ``c`` appears in a synthetic file.  The
# blocks are numbered like the classic worked example: b2-b3 validate the
# name, b5-b8 open and scan the file, b9 returns a status code.
CAL_FILE = """\
module cal_file
global @file_len: i32 = 12
export @cal_file

func @cal_file(%filename: i32, %c: i32) -> i32 {
  slot %n: i32
  slot %pos: i32
  slot %value: i32
  slot %rc: i32
b1:
  %n0 = slot_addr %n
  store i32 0, %n0
  %rc0 = slot_addr %rc
  store i32 0, %rc0
  %isnull = icmp eq i32 %filename, 0
  condbr %isnull, b2, b4
b2:
  print i32 -1
  %rc2 = slot_addr %rc
  store i32 1, %rc2
  br b3
b3:
  %okc = icmp sgt i32 %c, 0
  condbr %okc, b5, b9
b4:
  %okname = icmp slt i32 %filename, 100
  condbr %okname, b5, b9
b5:
  %pos5 = slot_addr %pos
  store i32 0, %pos5
  %n5 = slot_addr %n
  store i32 0, %n5
  br b6
b6:
  %pos6 = slot_addr %pos
  %p = load i32 %pos6
  %len = load i32 @file_len
  %more = icmp slt i32 %p, %len
  condbr %more, b7, b9
b7:
  %pos7 = slot_addr %pos
  %q = load i32 %pos7
  %q1 = add i32 %q, 1
  store i32 %q1, %pos7
  %h0 = mul i32 %q, 7
  %h1 = add i32 %h0, %filename
  %h2 = srem i32 %h1, 5
  %val7 = slot_addr %value
  store i32 %h2, %val7
  %v = load i32 %val7
  %hit = icmp eq i32 %v, %c
  condbr %hit, b8, b6
b8:
  %n8 = slot_addr %n
  %k = load i32 %n8
  %k1 = add i32 %k, 1
  store i32 %k1, %n8
  print i32 %k1
  br b6
b9:
  %rc9 = slot_addr %rc
  %r = load i32 %rc9
  ret %r
}
"""

# bar(short a, long b) and foo(int m, ptr n): the (short, int) pair compresses
# into one integer parameter.
BAR_FOO = """\
module bar_foo
export @main

func @bar(%a: i16, %b: i64) -> i32 {
entry:
  %a1 = sext i16 %a to i32
  %b1 = trunc i64 %b to i32
  %s = add i32 %a1, %b1
  ret %s
}

func @foo(%m: i32, %n: ptr) -> i16 {
entry:
  %m1 = mul i32 %m, 3
  %r = trunc i32 %m1 to i16
  ret %r
}

func @main(%x: i32) -> i32 {
entry:
  %a = trunc i32 %x to i16
  %b = sext i32 %x to i64
  %r1 = call i32 @bar(i16 %a, i64 %b)
  %r2 = call i16 @foo(i32 %x, ptr null)
  %r3 = sext i16 %r2 to i32
  %t = add i32 %r1, %r3
  print i32 %t
  ret %t
}
"""

# Same-signature pair reached through a function pointer; the pointer is
# taken on bar, which is placed on the ctrl=1 side.
FPTR_BAR_FOO = """\
module fptr
export @main

func @foo(%m: i32, %k: i64) -> i32 {
entry:
  %k1 = trunc i64 %k to i32
  %r = sub i32 %m, %k1
  ret %r
}

func @bar(%a: i32, %b: i64) -> i32 {
entry:
  %b1 = trunc i64 %b to i32
  %r = add i32 %a, %b1
  ret %r
}

func @main(%x: i32) -> i32 {
  slot %fp: ptr
entry:
  %fps = slot_addr %fp
  %f0 = addr_of_func @foo
  store ptr %f0, %fps
  %big = icmp sgt i32 %x, 10
  condbr %big, pick, go
pick:
  %f1 = addr_of_func @bar
  %fps1 = slot_addr %fp
  store ptr %f1, %fps1
  br go
go:
  %fps2 = slot_addr %fp
  %f = load ptr %fps2
  %w = sext i32 %x to i64
  %r = icall i32 %f(i32 %x, i64 %w)
  print i32 %r
  ret %r
}
"""


def cal_file():
    return parse_module(CAL_FILE)


def bar_foo():
    return parse_module(BAR_FOO)


def fptr_bar_foo():
    return parse_module(FPTR_BAR_FOO)
