package demo;

import org.junit.Test;
import static org.junit.Assert.*;

public class StepsTest {
    @Test
    public void oddBound() {
        assertEquals(3, new Steps().countEven(5));
    }
}
