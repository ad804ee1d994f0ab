package demo;

public class Calc {
    private int total;

    public int add(int a, int b) {
        return a + b;
    }

    public int sub(int a, int b) {
        return a - b;
    }

    public boolean isPositive(int x) {
        return x > 0;
    }

    public int sign(int x) {
        if (x < 0) {
            return -1;
        }
        return 1;
    }

    public boolean both(boolean p, boolean q) {
        return p && q;
    }

    public int negate(int x) {
        return -x;
    }

    public int half(int x) {
        return x >> 1;
    }

    public int mask(int x) {
        return x & 6;
    }

    public void accumulate(int x) {
        total = total + x;
    }

    public int getTotal() {
        return total;
    }

    public String greet() {
        return "hi";
    }

    public boolean yes() {
        return true;
    }
}
