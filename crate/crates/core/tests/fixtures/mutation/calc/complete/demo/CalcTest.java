package demo;

import org.junit.Test;
import static org.junit.Assert.*;

public class CalcTest {
    private final Calc calc = new Calc();

    @Test
    public void arithmetic() {
        assertEquals(10, calc.add(7, 3));
        assertEquals(4, calc.sub(7, 3));
        assertEquals(-3, calc.negate(3));
    }

    @Test
    public void positivity() {
        assertTrue(calc.isPositive(1));
        assertFalse(calc.isPositive(0));
        assertFalse(calc.isPositive(-1));
    }

    @Test
    public void signs() {
        assertEquals(-1, calc.sign(-5));
        assertEquals(-1, calc.sign(-1));
        assertEquals(1, calc.sign(0));
        assertEquals(1, calc.sign(5));
    }

    @Test
    public void logic() {
        assertFalse(calc.both(true, false));
        assertTrue(calc.both(true, true));
        assertTrue(calc.yes());
    }

    @Test
    public void bits() {
        assertEquals(-4, calc.half(-8));
        assertEquals(4, calc.mask(5));
    }

    @Test
    public void state() {
        calc.accumulate(5);
        assertEquals(5, calc.getTotal());
        assertEquals("hi", calc.greet());
    }
}
